#include "wavemsa/moa_index.hpp"

#include "wavemsa/errors.hpp"

#include <bit>
#include <numeric>
#include <sstream>

namespace wavemsa {

std::size_t MultiIndex::sum() const noexcept {
    return std::accumulate(coords_.begin(), coords_.end(), std::size_t{0});
}

std::string MultiIndex::to_string() const {
    std::ostringstream out;
    out << '(';
    for (std::size_t i = 0; i < coords_.size(); ++i) {
        if (i) out << ',';
        out << coords_[i];
    }
    out << ')';
    return out.str();
}

OffsetVector::OffsetVector(std::uint32_t mask, std::size_t k)
    : mask_(mask), k_(static_cast<std::uint8_t>(k)) {
    if (k == 0 || k > kMaxDims || mask == 0 || mask >= (1U << k))
        throw ContractViolation("offset vector must be a non-zero mask over k axes");
}

std::size_t OffsetVector::popcount() const noexcept {
    return static_cast<std::size_t>(std::popcount(mask_));
}

std::string OffsetVector::to_string() const {
    std::string s(k_, '0');
    for (std::size_t i = 0; i < k_; ++i)
        if ((*this)[i]) s[i] = '1';
    return s;
}

std::vector<OffsetVector> OffsetVector::all(std::size_t k) {
    std::vector<OffsetVector> out;
    out.reserve((std::size_t{1} << k) - 1);
    for (std::uint32_t m = 1; m < (1U << k); ++m) out.emplace_back(m, k);
    return out;
}

Shape::Shape(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
    if (dims_.size() < 2) throw ConfigError("shape needs at least 2 dimensions");
    if (dims_.size() > kMaxDims)
        throw ConfigError("shape has more than " + std::to_string(kMaxDims) + " dimensions");
    Offset cells = 1;
    for (auto d : dims_) {
        if (d < 2) throw ConfigError("every shape extent must be >= 2 (sequence length + 1)");
        if (__builtin_mul_overflow(cells, static_cast<Offset>(d), &cells))
            throw ConfigError("shape " + to_string() + " overflows the 64-bit cell offset");
    }
    cells_ = cells;
    strides_.assign(dims_.size(), 1);
    for (std::size_t i = dims_.size() - 1; i-- > 0;) strides_[i] = strides_[i + 1] * dims_[i + 1];
}

bool Shape::contains(const MultiIndex& idx) const noexcept {
    if (idx.size() != dims_.size()) return false;
    for (std::size_t i = 0; i < dims_.size(); ++i)
        if (idx[i] >= dims_[i]) return false;
    return true;
}

MultiIndex Shape::terminal() const {
    MultiIndex t(k());
    for (std::size_t i = 0; i < k(); ++i) t[i] = dims_[i] - 1;
    return t;
}

std::string Shape::to_string() const {
    std::ostringstream out;
    for (std::size_t i = 0; i < dims_.size(); ++i) {
        if (i) out << ',';
        out << dims_[i];
    }
    return out.str();
}

Shape parse_shape(const std::string& text) {
    std::vector<std::size_t> dims;
    std::string token;
    auto flush = [&] {
        if (token.empty()) throw ConfigError("malformed shape '" + text + "'");
        std::size_t used = 0;
        unsigned long long v = 0;
        try {
            v = std::stoull(token, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != token.size()) throw ConfigError("malformed shape '" + text + "'");
        dims.push_back(static_cast<std::size_t>(v));
        token.clear();
    };
    for (char ch : text) {
        if (ch == ',' || ch == 'x') {
            flush();
        } else if (ch != ' ') {
            token += ch;
        }
    }
    flush();
    return Shape(std::move(dims));
}

std::vector<Offset> strides(const Shape& shape) { return shape.strides(); }

Offset flatten(const Shape& shape, const MultiIndex& idx) {
    if (!shape.contains(idx))
        throw BoundsError("index " + idx.to_string() + " outside shape (" + shape.to_string() + ")");
    Offset off = 0;
    const auto& st = shape.strides();
    for (std::size_t i = 0; i < idx.size(); ++i) off += idx[i] * st[i];
    return off;
}

MultiIndex unflatten(const Shape& shape, Offset offset) {
    if (offset >= shape.cell_count())
        throw BoundsError("offset " + std::to_string(offset) + " outside shape (" + shape.to_string() + ")");
    MultiIndex idx(shape.k());
    const auto& st = shape.strides();
    for (std::size_t i = 0; i < shape.k(); ++i) {
        idx[i] = static_cast<std::size_t>(offset / st[i]);
        offset %= st[i];
    }
    return idx;
}

std::vector<Neighbor> lower_neighbors(const Shape& shape, const MultiIndex& idx) {
    if (!shape.contains(idx)) throw BoundsError("index " + idx.to_string() + " outside shape");
    const std::size_t k = shape.k();
    std::uint32_t zero_axes = 0;
    for (std::size_t i = 0; i < k; ++i)
        if (idx[i] == 0) zero_axes |= axis_bit(i, k);
    std::vector<Neighbor> out;
    for (std::uint32_t m = 1; m < (1U << k); ++m) {
        if (m & zero_axes) continue;
        MultiIndex n = idx;
        for (std::size_t i = 0; i < k; ++i)
            if (m & axis_bit(i, k)) --n[i];
        out.emplace_back(OffsetVector(m, k), std::move(n));
    }
    return out;
}

std::vector<Neighbor> higher_neighbors(const Shape& shape, const MultiIndex& idx) {
    if (!shape.contains(idx)) throw BoundsError("index " + idx.to_string() + " outside shape");
    const std::size_t k = shape.k();
    std::uint32_t top_axes = 0;
    for (std::size_t i = 0; i < k; ++i)
        if (idx[i] + 1 == shape[i]) top_axes |= axis_bit(i, k);
    std::vector<Neighbor> out;
    for (std::uint32_t m = 1; m < (1U << k); ++m) {
        if (m & top_axes) continue;
        MultiIndex n = idx;
        for (std::size_t i = 0; i < k; ++i)
            if (m & axis_bit(i, k)) ++n[i];
        out.emplace_back(OffsetVector(m, k), std::move(n));
    }
    return out;
}

}  // namespace wavemsa
