#include "wavemsa/dp_core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>

namespace wavemsa {

namespace {

template <typename Score>
Score convert(double v) {
    if constexpr (std::is_integral_v<Score>) {
        return static_cast<Score>(std::llround(v));
    } else {
        return v;
    }
}

}  // namespace

void require_integral(const ScoringScheme& scheme) {
    if (!scheme.is_integral()) throw SchemeError("scheme has non-integer values; use real-valued scoring");
}

template <typename Score>
CellKernel<Score>::CellKernel(const SequenceSet& seqs, const ScoringScheme& scheme) : k_(seqs.k()) {
    if constexpr (std::is_integral_v<Score>) require_integral(scheme);
    residues_.reserve(k_);
    for (const auto& r : seqs.records()) {
        std::vector<std::uint8_t> codes;
        codes.reserve(r.residues.size());
        for (char c : r.residues) codes.push_back(static_cast<std::uint8_t>(c - 'A'));
        residues_.push_back(std::move(codes));
    }
    for (char x = 'A'; x <= 'Z'; ++x)
        for (char y = 'A'; y <= 'Z'; ++y) table_[(x - 'A') * 26 + (y - 'A')] = convert<Score>(scheme.pair_score(x, y));
    gap_ = convert<Score>(scheme.gap);
    gap_gap_ = convert<Score>(scheme.gap_gap);
}

template <typename Score>
CellScore<Score> score_cell(const MultiIndex& cell,
                            const std::function<std::optional<Score>(const MultiIndex&)>& neighbor_lookup,
                            const SequenceSet& seqs, const ScoringScheme& scheme) {
    const auto shape = seqs.shape();
    if (!shape.contains(cell)) throw BoundsError("cell " + cell.to_string() + " outside the tensor");
    if (cell.sum() == 0) throw ContractViolation("score_cell called on the origin");
    const std::size_t k = seqs.k();
    CellKernel<Score> kernel(seqs, scheme);
    auto [value, move] = kernel.evaluate(cell.coords(), [&](std::uint32_t m) {
        MultiIndex n = cell;
        for (std::size_t s = 0; s < k; ++s)
            if (m & axis_bit(s, k)) --n[s];
        auto v = neighbor_lookup(n);
        if (!v) throw DependencyError("neighbour " + n.to_string() + " of cell " + cell.to_string() + " unavailable");
        return *v;
    });
    return {value, OffsetVector(move, k)};
}

Offset default_max_cells() {
    if (const char* env = std::getenv("WAVEMSA_MAX_CELLS")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw ConfigError(std::string("WAVEMSA_MAX_CELLS is not a number: ") + env);
        }
    }
    return Offset{1} << 28;
}

template <typename Score>
ScoreTensor<Score> score_sequential(const SequenceSet& seqs, const ScoringScheme& scheme, Offset max_cells) {
    const Shape shape = seqs.shape();
    if (shape.cell_count() > max_cells)
        throw CapacityError("tensor (" + shape.to_string() + ") has " + std::to_string(shape.cell_count()) +
                            " cells, above the cap of " + std::to_string(max_cells));
    const std::size_t k = shape.k();
    CellKernel<Score> kernel(seqs, scheme);

    std::vector<Offset> delta(std::size_t{1} << k, 0);
    for (std::uint32_t m = 1; m < delta.size(); ++m)
        for (std::size_t s = 0; s < k; ++s)
            if (m & axis_bit(s, k)) delta[m] += shape.strides()[s];

    ScoreTensor<Score> tensor(shape);
    std::vector<std::size_t> coords(k, 0);
    tensor.set(0, Score{}, 0);
    for (Offset off = 1; off < shape.cell_count(); ++off) {
        for (std::size_t s = k; s-- > 0;) {
            if (++coords[s] < shape[s]) break;
            coords[s] = 0;
        }
        auto [v, m] = kernel.evaluate(coords, [&](std::uint32_t mask) { return tensor.value(off - delta[mask]); });
        tensor.set(off, v, m);
    }
    return tensor;
}

template <typename Score>
Alignment traceback(const ScoreTensor<Score>& tensor, const SequenceSet& seqs) {
    const Shape& shape = tensor.shape();
    if (!(shape == seqs.shape())) throw ContractViolation("tensor shape does not match the sequences");
    const std::size_t k = shape.k();
    MultiIndex cur = shape.terminal();
    std::vector<std::string> rev(k);
    while (cur.sum() != 0) {
        const MoveMask m = tensor.move(flatten(shape, cur));
        if (m == 0) throw ContractViolation("missing move provenance at " + cur.to_string());
        for (std::size_t s = 0; s < k; ++s) {
            if (m & axis_bit(s, k)) {
                if (cur[s] == 0) throw ContractViolation("stored move leaves the tensor at " + cur.to_string());
                rev[s] += seqs[s].residues[cur[s] - 1];
                --cur[s];
            } else {
                rev[s] += kGap;
            }
        }
    }
    Alignment aln;
    for (std::size_t s = 0; s < k; ++s) {
        aln.ids.push_back(seqs[s].id);
        aln.rows.emplace_back(rev[s].rbegin(), rev[s].rend());
    }
    return aln;
}

double count_alignment_paths(const Shape& shape) {
    // paths(x) = sum over feasible lower moves of paths(x - d), paths(origin) = 1
    const std::size_t k = shape.k();
    std::vector<double> paths(shape.cell_count(), 0.0);
    paths[0] = 1;
    std::vector<std::size_t> coords(k, 0);
    for (Offset off = 1; off < shape.cell_count(); ++off) {
        for (std::size_t s = k; s-- > 0;) {
            if (++coords[s] < shape[s]) break;
            coords[s] = 0;
        }
        double total = 0;
        for (std::uint32_t m = 1; m < (1U << k); ++m) {
            Offset back = 0;
            bool ok = true;
            for (std::size_t s = 0; s < k && ok; ++s) {
                if (!(m & axis_bit(s, k))) continue;
                ok = coords[s] > 0;
                back += shape.strides()[s];
            }
            if (ok) total += paths[off - back];
        }
        paths[off] = total;
    }
    return paths.back();
}

namespace {

struct Enumerator {
    const SequenceSet& seqs;
    const ScoringScheme& scheme;
    std::size_t k;
    std::vector<std::size_t> pos;
    std::vector<std::string> rows;
    double running = 0;
    bool have_best = false;
    double best = 0;
    std::vector<std::string> best_rows;

    bool done() const {
        for (std::size_t s = 0; s < k; ++s)
            if (pos[s] != seqs[s].residues.size()) return false;
        return true;
    }

    void walk() {
        if (done()) {
            if (!have_best || running > best) {
                have_best = true;
                best = running;
                best_rows = rows;
            }
            return;
        }
        // Every non-empty subset of the sequences with residues left emits one column.
        for (std::uint32_t m = 1; m < (1U << k); ++m) {
            bool ok = true;
            for (std::size_t s = 0; s < k && ok; ++s)
                if ((m >> s) & 1U) ok = pos[s] < seqs[s].residues.size();
            if (!ok) continue;
            std::string column(k, kGap);
            for (std::size_t s = 0; s < k; ++s)
                if ((m >> s) & 1U) column[s] = seqs[s].residues[pos[s]];
            double col = 0;
            for (std::size_t s = 0; s < k; ++s)
                for (std::size_t t = s + 1; t < k; ++t) col += scheme.pair_score(column[s], column[t]);
            for (std::size_t s = 0; s < k; ++s) {
                rows[s] += column[s];
                if ((m >> s) & 1U) ++pos[s];
            }
            running += col;
            walk();
            running -= col;
            for (std::size_t s = 0; s < k; ++s) {
                rows[s].pop_back();
                if ((m >> s) & 1U) --pos[s];
            }
        }
    }
};

}  // namespace

BruteForceResult brute_force_best(const SequenceSet& seqs, const ScoringScheme& scheme, double max_paths) {
    const double paths = count_alignment_paths(seqs.shape());
    if (paths > max_paths)
        throw CapacityError("brute force would enumerate " + std::to_string(paths) + " alignments, above the cap of " +
                            std::to_string(max_paths));
    Enumerator e{seqs, scheme, seqs.k(), std::vector<std::size_t>(seqs.k(), 0), std::vector<std::string>(seqs.k()), 0, false, 0, {}};
    e.walk();
    BruteForceResult out;
    out.score = e.best;
    for (std::size_t s = 0; s < seqs.k(); ++s) out.witness.ids.push_back(seqs[s].id);
    out.witness.rows = std::move(e.best_rows);
    return out;
}

template class CellKernel<std::int64_t>;
template class CellKernel<double>;
template CellScore<std::int64_t> score_cell(const MultiIndex&,
                                            const std::function<std::optional<std::int64_t>(const MultiIndex&)>&,
                                            const SequenceSet&, const ScoringScheme&);
template CellScore<double> score_cell(const MultiIndex&, const std::function<std::optional<double>(const MultiIndex&)>&,
                                      const SequenceSet&, const ScoringScheme&);
template ScoreTensor<std::int64_t> score_sequential(const SequenceSet&, const ScoringScheme&, Offset);
template ScoreTensor<double> score_sequential(const SequenceSet&, const ScoringScheme&, Offset);
template Alignment traceback(const ScoreTensor<std::int64_t>&, const SequenceSet&);
template Alignment traceback(const ScoreTensor<double>&, const SequenceSet&);

}  // namespace wavemsa
