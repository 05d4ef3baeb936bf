#include "wavemsa/partitioner.hpp"

#include "wavemsa/errors.hpp"

#include <algorithm>
#include <set>
#include <string>
#include <utility>

namespace wavemsa {

namespace {

// Advances `cell` through the box in row-major order; false after the last.
bool next_in_box(MultiIndex& cell, const Box& box) {
    for (std::size_t s = cell.size(); s-- > 0;) {
        if (cell[s] < box.hi[s]) {
            ++cell[s];
            return true;
        }
        cell[s] = box.lo[s];
    }
    return false;
}

}  // namespace

bool Box::contains(const MultiIndex& cell) const noexcept {
    for (std::size_t i = 0; i < lo.size(); ++i)
        if (cell[i] < lo[i] || cell[i] > hi[i]) return false;
    return true;
}

Offset Box::cell_count() const noexcept {
    Offset n = 1;
    for (std::size_t i = 0; i < lo.size(); ++i) n *= hi[i] >= lo[i] ? hi[i] - lo[i] + 1 : 0;
    return n;
}

PartitionGrid::PartitionGrid(Shape shape, std::size_t partition_size)
    : shape_(std::move(shape)), size_(partition_size) {
    const auto min_extent = *std::min_element(shape_.dims().begin(), shape_.dims().end());
    if (size_ < 2 || size_ > min_extent)
        throw ConfigError("partition size " + std::to_string(size_) + " must lie in [2, " +
                          std::to_string(min_extent) + "] for shape (" + shape_.to_string() + ")");
    counts_.resize(k());
    grid_strides_.assign(k(), 1);
    waves_ = 1;
    for (std::size_t i = 0; i < k(); ++i) {
        counts_[i] = (shape_[i] - 1 + size_ - 2) / (size_ - 1);
        total_ *= counts_[i];
        waves_ += counts_[i] - 1;
    }
    for (std::size_t i = k() - 1; i-- > 0;) grid_strides_[i] = grid_strides_[i + 1] * counts_[i + 1];
}

bool PartitionGrid::contains(const MultiIndex& grid) const noexcept {
    if (grid.size() != k()) return false;
    for (std::size_t i = 0; i < k(); ++i)
        if (grid[i] >= counts_[i]) return false;
    return true;
}

std::size_t PartitionGrid::flat(const MultiIndex& grid) const {
    if (!contains(grid)) throw BoundsError("partition " + grid.to_string() + " outside the grid");
    std::size_t id = 0;
    for (std::size_t i = 0; i < k(); ++i) id += grid[i] * grid_strides_[i];
    return id;
}

MultiIndex PartitionGrid::unflat(std::size_t id) const {
    if (id >= total_) throw BoundsError("partition number " + std::to_string(id) + " outside the grid");
    MultiIndex g(k());
    for (std::size_t i = 0; i < k(); ++i) {
        g[i] = id / grid_strides_[i];
        id %= grid_strides_[i];
    }
    return g;
}

std::size_t PartitionGrid::owner_flat(std::span<const std::size_t> cell) const noexcept {
    const std::size_t step = size_ - 1;
    std::size_t id = 0;
    for (std::size_t i = 0; i < cell.size(); ++i)
        if (cell[i] != 0) id += ((cell[i] + step - 1) / step - 1) * grid_strides_[i];
    return id;
}

PartitionId PartitionGrid::partition(const MultiIndex& grid) const {
    if (!contains(grid)) throw BoundsError("partition " + grid.to_string() + " outside the grid");
    MultiIndex first(k());
    for (std::size_t i = 0; i < k(); ++i) first[i] = grid[i] * (size_ - 1);
    return {grid, std::move(first), grid.sum()};
}

Box PartitionGrid::box(const MultiIndex& grid) const {
    if (!contains(grid)) throw BoundsError("partition " + grid.to_string() + " outside the grid");
    Box b{MultiIndex(k()), MultiIndex(k())};
    for (std::size_t i = 0; i < k(); ++i) {
        b.lo[i] = grid[i] * (size_ - 1);
        b.hi[i] = std::min(b.lo[i] + size_ - 1, shape_[i] - 1);
    }
    return b;
}

Box PartitionGrid::owned_box(const MultiIndex& grid) const {
    Box b = box(grid);
    for (std::size_t i = 0; i < k(); ++i)
        if (grid[i] > 0) ++b.lo[i];
    return b;
}

PartitionGrid build_grid(const Shape& shape, std::size_t partition_size) { return {shape, partition_size}; }

std::optional<std::size_t> closed_form_wave_count(const Shape& shape, std::size_t partition_size) {
    if (partition_size < 2) return std::nullopt;
    const std::size_t step = partition_size - 1;
    for (auto d : shape.dims())
        if ((d - 1) % step != 0) return std::nullopt;
    std::size_t t = (shape[0] - 1) / step;
    for (std::size_t i = 1; i < shape.k(); ++i) t += (shape[i] - 1) / step - 1;
    return t;
}

std::optional<std::size_t> closed_form_partition_count(const Shape& shape, std::size_t partition_size) {
    if (partition_size < 2) return std::nullopt;
    const std::size_t step = partition_size - 1;
    std::size_t p = 1;
    for (auto d : shape.dims()) {
        if ((d - 1) % step != 0) return std::nullopt;
        p *= (d - 1) / step;
    }
    return p;
}

IntegerPartitions::IntegerPartitions(std::size_t n, std::size_t parts, std::size_t max_part)
    : n_(n), parts_(parts), max_part_(max_part) {
    if (parts_ == 0) throw ContractViolation("integer partitions need at least one part");
}

bool IntegerPartitions::next(std::vector<std::size_t>& out) {
    if (done_) return false;
    if (!started_) {
        started_ = true;
        if (n_ > 0 && (max_part_ == 0 || n_ > parts_ * max_part_)) {
            done_ = true;
            return false;
        }
        current_.assign(parts_, 0);
        std::size_t left = n_;
        for (std::size_t i = 0; i < parts_ && left > 0; ++i) {
            current_[i] = std::min(left, max_part_);
            left -= current_[i];
        }
        out = current_;
        return true;
    }
    // Rightmost part that can shrink by one while the tail still fits below it.
    std::size_t tail = 0;
    for (std::size_t i = parts_; i-- > 0;) {
        if (current_[i] >= 2) {
            const std::size_t cap = current_[i] - 1;
            const std::size_t spread = tail + 1;
            if (spread <= (parts_ - 1 - i) * cap) {
                current_[i] = cap;
                std::size_t left = spread;
                for (std::size_t j = i + 1; j < parts_; ++j) {
                    current_[j] = std::min(left, cap);
                    left -= current_[j];
                }
                out = current_;
                return true;
            }
        }
        tail += current_[i];
    }
    done_ = true;
    return false;
}

std::vector<PartitionId> enumerate_wave(const PartitionGrid& grid, std::size_t wave) {
    if (wave >= grid.wave_count())
        throw BoundsError("wave " + std::to_string(wave) + " outside [0, " + std::to_string(grid.wave_count()) + ")");
    const std::size_t k = grid.k();
    const std::size_t max_part = *std::max_element(grid.counts().begin(), grid.counts().end()) - 1;
    std::vector<PartitionId> out;
    IntegerPartitions parts(wave, k, max_part);
    std::vector<std::size_t> ip;
    while (parts.next(ip)) {
        std::vector<std::size_t> perm(ip.rbegin(), ip.rend());  // ascending start for next_permutation
        do {
            MultiIndex g(perm);
            if (grid.contains(g)) out.push_back(grid.partition(g));
        } while (std::next_permutation(perm.begin(), perm.end()));
    }
    std::sort(out.begin(), out.end(), [](const PartitionId& a, const PartitionId& b) { return a.grid < b.grid; });
    return out;
}

std::uint64_t count_wave(std::size_t k, std::size_t wave, const std::optional<std::vector<std::size_t>>& bounds) {
    if (k < 1) throw ContractViolation("count_wave needs k >= 1");
    if (!bounds) {
        // C(w + k - 1, k - 1), multiplicative form keeps every step integral.
        const std::uint64_t r = k - 1;
        unsigned __int128 c = 1;
        for (std::uint64_t i = 1; i <= r; ++i) {
            c = c * (wave + i) / i;
            if (c > ~std::uint64_t{0}) throw CapacityError("wave count overflows 64 bits");
        }
        return static_cast<std::uint64_t>(c);
    }
    if (bounds->size() != k) throw ContractViolation("count_wave bounds must have k entries");
    // ways[s] = number of prefixes with coordinate sum s
    std::vector<std::uint64_t> ways(wave + 1, 0);
    ways[0] = 1;
    for (std::size_t i = 0; i < k; ++i) {
        std::vector<std::uint64_t> next(wave + 1, 0);
        for (std::size_t s = 0; s <= wave; ++s) {
            if (!ways[s]) continue;
            for (std::size_t g = 0; g < (*bounds)[i] && s + g <= wave; ++g) next[s + g] += ways[s];
        }
        ways = std::move(next);
    }
    return ways[wave];
}

std::uint64_t overlap_cells_formula(const PartitionGrid& grid) {
    const auto& rho = grid.shape().dims();
    const auto& p = grid.counts();
    std::uint64_t c_prev = rho[0] - 1;
    std::uint64_t total = c_prev;
    std::uint64_t prod = p[0];
    for (std::size_t i = 1; i < grid.k(); ++i) {
        prod *= p[i];
        const std::uint64_t c_i = c_prev * rho[i] + prod * (std::uint64_t{1} << i) - 1;
        total += c_i;
        c_prev = c_i;
    }
    return total;
}

std::vector<std::size_t> boundary_positions(std::size_t extent, std::size_t partition_size) {
    if (partition_size < 2 || extent < 2) throw ConfigError("boundary positions need extent >= 2 and S >= 2");
    std::vector<std::size_t> out;
    for (std::size_t pos = partition_size - 1; pos < extent - 1; pos += partition_size - 1) out.push_back(pos);
    return out;
}

std::uint64_t overlap_cells_oracle(const PartitionGrid& grid, Offset max_cells) {
    const Shape& shape = grid.shape();
    if (shape.cell_count() > max_cells)
        throw CapacityError("overlap enumeration over " + std::to_string(shape.cell_count()) + " cells exceeds cap");
    std::vector<std::vector<bool>> boundary(grid.k());
    for (std::size_t i = 0; i < grid.k(); ++i) {
        boundary[i].assign(shape[i], false);
        for (auto pos : boundary_positions(shape[i], grid.partition_size())) boundary[i][pos] = true;
    }
    std::uint64_t shared = 0;
    for (Offset off = 0; off < shape.cell_count(); ++off) {
        const MultiIndex cell = unflatten(shape, off);
        for (std::size_t i = 0; i < grid.k(); ++i) {
            if (boundary[i][cell[i]]) {
                ++shared;
                break;
            }
        }
    }
    return shared;
}

MultiIndex owner_of_cell(const PartitionGrid& grid, const MultiIndex& cell) {
    if (!grid.shape().contains(cell)) throw BoundsError("cell " + cell.to_string() + " outside the tensor");
    const std::size_t step = grid.partition_size() - 1;
    MultiIndex g(grid.k());
    for (std::size_t i = 0; i < grid.k(); ++i) g[i] = cell[i] == 0 ? 0 : (cell[i] + step - 1) / step - 1;
    return g;
}

SchedulePolicy parse_schedule_policy(std::string_view name) {
    if (name == "block") return SchedulePolicy::block;
    if (name == "round-robin" || name == "round_robin") return SchedulePolicy::round_robin;
    throw ConfigError("unknown schedule policy '" + std::string(name) + "' (block, round-robin)");
}

std::size_t assign_worker(std::size_t j, std::size_t wave_size, std::size_t workers, SchedulePolicy policy) {
    if (workers < 1) throw ConfigError("need at least one worker");
    if (policy == SchedulePolicy::round_robin) return j % workers;
    const std::size_t block = (wave_size + workers - 1) / workers;
    return std::min(j / block, workers - 1);
}

WaveSchedule::WaveSchedule(const PartitionGrid& grid, std::size_t workers, SchedulePolicy policy)
    : workers_(workers), owner_(grid.total_partitions(), 0) {
    if (workers < 1) throw ConfigError("need at least one worker");
    waves_.reserve(grid.wave_count());
    for (std::size_t w = 0; w < grid.wave_count(); ++w) {
        waves_.push_back(enumerate_wave(grid, w));
        const auto& wave = waves_.back();
        for (std::size_t j = 0; j < wave.size(); ++j)
            owner_[grid.flat(wave[j].grid)] = assign_worker(j, wave.size(), workers, policy);
    }
}

std::vector<std::size_t> WaveSchedule::allocation() const {
    std::vector<std::size_t> p(workers_, 0);
    for (auto w : owner_) ++p[w];
    return p;
}

WaveSchedule schedule(const PartitionGrid& grid, std::size_t workers, SchedulePolicy policy) {
    return {grid, workers, policy};
}

std::vector<DependencyEdge> dependency_edges(const PartitionGrid& grid) {
    const std::size_t k = grid.k();
    std::vector<DependencyEdge> edges;
    for (std::size_t id = 0; id < grid.total_partitions(); ++id) {
        const MultiIndex g = grid.unflat(id);
        for (std::uint32_t m = 1; m < (1U << k); ++m) {
            MultiIndex to = g;
            for (std::size_t i = 0; i < k; ++i)
                if (m & axis_bit(i, k)) ++to[i];
            if (grid.contains(to)) edges.push_back({g, std::move(to), OffsetVector(m, k)});
        }
    }
    return edges;
}

std::vector<std::uint64_t> cells_sent_per_worker(const PartitionGrid& grid, const WaveSchedule& sched) {
    std::vector<std::uint64_t> sent(sched.workers(), 0);
    const Shape& shape = grid.shape();
    for (std::size_t id = 0; id < grid.total_partitions(); ++id) {
        const MultiIndex g = grid.unflat(id);
        const std::size_t me = sched.owner(id);
        const Box owned = grid.owned_box(g);
        std::set<std::pair<std::size_t, Offset>> targets;
        MultiIndex cell = owned.lo;
        do {
            for (const auto& [d, n] : higher_neighbors(shape, cell)) {
                const std::size_t dest = sched.owner(grid, owner_of_cell(grid, n));
                if (dest != me) targets.emplace(dest, flatten(shape, cell));
            }
        } while (next_in_box(cell, owned));
        sent[me] += targets.size();
    }
    return sent;
}

}  // namespace wavemsa
