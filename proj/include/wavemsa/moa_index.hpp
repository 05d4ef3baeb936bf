#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace wavemsa {

using Offset = std::uint64_t;

/// Maximum dimensionality; offset vectors are stored as bit masks.
inline constexpr std::size_t kMaxDims = 16;

/// Coordinates of one cell (or one partition in the partition grid).
class MultiIndex {
public:
    MultiIndex() = default;
    explicit MultiIndex(std::size_t k) : coords_(k, 0) {}
    MultiIndex(std::initializer_list<std::size_t> c) : coords_(c) {}
    explicit MultiIndex(std::vector<std::size_t> c) : coords_(std::move(c)) {}

    [[nodiscard]] std::size_t size() const noexcept { return coords_.size(); }
    std::size_t& operator[](std::size_t i) { return coords_[i]; }
    std::size_t operator[](std::size_t i) const { return coords_[i]; }
    [[nodiscard]] auto begin() const noexcept { return coords_.begin(); }
    [[nodiscard]] auto end() const noexcept { return coords_.end(); }
    auto begin() noexcept { return coords_.begin(); }
    auto end() noexcept { return coords_.end(); }
    [[nodiscard]] std::span<const std::size_t> coords() const noexcept { return coords_; }

    [[nodiscard]] std::size_t sum() const noexcept;
    [[nodiscard]] std::string to_string() const;

    friend auto operator<=>(const MultiIndex&, const MultiIndex&) = default;
    friend bool operator==(const MultiIndex&, const MultiIndex&) = default;

private:
    std::vector<std::size_t> coords_;
};

/// A non-zero vector in {0,1}^k. Axis 0 is the most significant bit, so the
/// canonical order is plain counting order of `mask()` from 1 to 2^k - 1.
class OffsetVector {
public:
    OffsetVector(std::uint32_t mask, std::size_t k);

    [[nodiscard]] std::uint32_t mask() const noexcept { return mask_; }
    [[nodiscard]] std::size_t dims() const noexcept { return k_; }
    [[nodiscard]] bool operator[](std::size_t axis) const noexcept {
        return (mask_ >> (k_ - 1 - axis)) & 1U;
    }
    [[nodiscard]] std::size_t popcount() const noexcept;
    [[nodiscard]] std::string to_string() const;  // e.g. "011"

    /// All 2^k - 1 offset vectors in canonical order.
    static std::vector<OffsetVector> all(std::size_t k);
    static OffsetVector diagonal(std::size_t k) { return {(1U << k) - 1U, k}; }

    friend bool operator==(const OffsetVector&, const OffsetVector&) = default;

private:
    std::uint32_t mask_;
    std::uint8_t k_;
};

/// Bit of `axis` inside a mask over k axes.
constexpr std::uint32_t axis_bit(std::size_t axis, std::size_t k) noexcept {
    return 1U << (k - 1 - axis);
}

/// Row-major geometry of a k-dimensional tensor; every extent counts the
/// leading gap row, so an axis for a sequence of length n has n + 1 cells.
class Shape {
public:
    /// Throws ConfigError when k < 2, k > kMaxDims, any extent < 2, or the
    /// cell count does not fit in Offset.
    explicit Shape(std::vector<std::size_t> dims);
    Shape(std::initializer_list<std::size_t> dims) : Shape(std::vector<std::size_t>(dims)) {}

    [[nodiscard]] std::size_t k() const noexcept { return dims_.size(); }
    [[nodiscard]] std::size_t operator[](std::size_t i) const { return dims_[i]; }
    [[nodiscard]] const std::vector<std::size_t>& dims() const noexcept { return dims_; }
    [[nodiscard]] Offset cell_count() const noexcept { return cells_; }
    [[nodiscard]] const std::vector<Offset>& strides() const noexcept { return strides_; }
    [[nodiscard]] bool contains(const MultiIndex& idx) const noexcept;
    [[nodiscard]] MultiIndex terminal() const;
    [[nodiscard]] std::string to_string() const;  // "9,9,9,9"

    friend bool operator==(const Shape& a, const Shape& b) { return a.dims_ == b.dims_; }

private:
    std::vector<std::size_t> dims_;
    std::vector<Offset> strides_;
    Offset cells_ = 0;
};

/// Parses "9,9,9,9" (also accepts 'x' as separator).
Shape parse_shape(const std::string& text);

std::vector<Offset> strides(const Shape& shape);
Offset flatten(const Shape& shape, const MultiIndex& idx);
MultiIndex unflatten(const Shape& shape, Offset offset);

using Neighbor = std::pair<OffsetVector, MultiIndex>;

/// idx - d for every offset vector d that stays non-negative, canonical order.
std::vector<Neighbor> lower_neighbors(const Shape& shape, const MultiIndex& idx);
/// idx + d for every offset vector d that stays inside the shape, canonical order.
std::vector<Neighbor> higher_neighbors(const Shape& shape, const MultiIndex& idx);

}  // namespace wavemsa
