#pragma once

#include "wavemsa/errors.hpp"
#include "wavemsa/moa_index.hpp"
#include "wavemsa/sequences.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <type_traits>
#include <utility>
#include <vector>

namespace wavemsa {

/// Offset-vector mask of the move that produced a cell; 0 marks the origin.
using MoveMask = std::uint16_t;

/// Integral schemes score in int64_t and compare exactly; real-valued schemes
/// use double with a 1e-9 comparison tolerance.
template <typename Score>
struct ScoreTraits;

template <>
struct ScoreTraits<std::int64_t> {
    static constexpr const char* name = "int64";
    static bool better(std::int64_t candidate, std::int64_t best) noexcept { return candidate > best; }
    static bool same(std::int64_t a, std::int64_t b) noexcept { return a == b; }
};

template <>
struct ScoreTraits<double> {
    static constexpr const char* name = "float64";
    static constexpr double tolerance = 1e-9;
    static bool better(double candidate, double best) noexcept { return candidate > best + tolerance; }
    static bool same(double a, double b) noexcept { return a == b; }
};

template <typename Score>
struct CellScore {
    Score value{};
    std::optional<OffsetVector> best_move;  // absent at the origin
};

/// Dense scores plus best-move provenance over a Shape, in flatten order.
template <typename Score>
class ScoreTensor {
public:
    explicit ScoreTensor(Shape shape)
        : shape_(std::move(shape)), values_(shape_.cell_count()), moves_(shape_.cell_count(), 0) {}

    [[nodiscard]] const Shape& shape() const noexcept { return shape_; }
    [[nodiscard]] Score value(Offset off) const { return values_[off]; }
    [[nodiscard]] MoveMask move(Offset off) const { return moves_[off]; }
    [[nodiscard]] Score at(const MultiIndex& idx) const { return values_[flatten(shape_, idx)]; }
    [[nodiscard]] Score terminal_value() const { return values_.back(); }
    void set(Offset off, Score v, MoveMask m) {
        values_[off] = v;
        moves_[off] = m;
    }
    [[nodiscard]] std::span<const Score> values() const noexcept { return values_; }
    [[nodiscard]] std::span<const MoveMask> moves() const noexcept { return moves_; }

    friend bool operator==(const ScoreTensor&, const ScoreTensor&) = default;

private:
    Shape shape_;
    std::vector<Score> values_;
    std::vector<MoveMask> moves_;
};

/// Evaluates the recurrence at one cell. Residues are pre-encoded and the
/// pair scores tabulated so the hot loop is table lookups only.
template <typename Score>
class CellKernel {
public:
    CellKernel(const SequenceSet& seqs, const ScoringScheme& scheme);

    [[nodiscard]] std::size_t k() const noexcept { return k_; }

    /// `coords` are global coordinates (not the origin). `lookup(mask)` must
    /// return the score of the lower neighbour coords - mask; it is only called
    /// for masks that do not step below zero. Ties prefer the all-ones
    /// diagonal, then the lowest mask.
    template <typename Lookup>
    std::pair<Score, MoveMask> evaluate(std::span<const std::size_t> coords, Lookup&& lookup) const {
        std::array<std::uint8_t, kMaxDims> res{};
        std::uint32_t zero_axes = 0;
        for (std::size_t s = 0; s < k_; ++s) {
            if (coords[s] == 0) {
                zero_axes |= axis_bit(s, k_);
            } else {
                res[s] = residues_[s][coords[s] - 1];
            }
        }
        const std::uint32_t full = (1U << k_) - 1U;
        Score best{};
        MoveMask best_move = 0;
        auto consider = [&](std::uint32_t m) {
            Score col{};
            for (std::size_t s = 0; s < k_; ++s) {
                const bool ds = m & axis_bit(s, k_);
                for (std::size_t t = s + 1; t < k_; ++t) {
                    const bool dt = m & axis_bit(t, k_);
                    if (ds && dt) col += table_[res[s] * 26 + res[t]];
                    else if (ds || dt) col += gap_;
                    else col += gap_gap_;
                }
            }
            const Score cand = lookup(m) + col;
            if (best_move == 0 || ScoreTraits<Score>::better(cand, best)) {
                best = cand;
                best_move = static_cast<MoveMask>(m);
            }
        };
        if ((full & zero_axes) == 0) consider(full);
        for (std::uint32_t m = 1; m < full; ++m)
            if ((m & zero_axes) == 0) consider(m);
        return {best, best_move};
    }

private:
    std::size_t k_;
    std::vector<std::vector<std::uint8_t>> residues_;
    std::array<Score, 26 * 26> table_{};
    Score gap_{};
    Score gap_gap_{};
};

/// Generic single-cell recurrence with a by-index neighbour lookup. A lookup
/// returning nullopt for a required neighbour raises DependencyError.
template <typename Score>
CellScore<Score> score_cell(const MultiIndex& cell,
                            const std::function<std::optional<Score>(const MultiIndex&)>& neighbor_lookup,
                            const SequenceSet& seqs, const ScoringScheme& scheme);

/// Default cap on cells for a dense tensor; overridable by the
/// WAVEMSA_MAX_CELLS environment variable.
Offset default_max_cells();

/// Scores the full tensor in ascending flat order (topological for row-major).
template <typename Score>
ScoreTensor<Score> score_sequential(const SequenceSet& seqs, const ScoringScheme& scheme,
                                    Offset max_cells = default_max_cells());

/// Follows stored moves from the terminal corner back to the origin.
template <typename Score>
Alignment traceback(const ScoreTensor<Score>& tensor, const SequenceSet& seqs);

/// Number of monotone lattice paths from the origin to the terminal corner.
double count_alignment_paths(const Shape& shape);

struct BruteForceResult {
    double score = 0;
    Alignment witness;
};

/// Exhaustive search over every gapped alignment (monotone path). Refuses
/// with CapacityError when the path count exceeds `max_paths`.
BruteForceResult brute_force_best(const SequenceSet& seqs, const ScoringScheme& scheme,
                                  double max_paths = 1e6);

/// Checks an integral scheme can drive int64 scoring.
void require_integral(const ScoringScheme& scheme);

}  // namespace wavemsa
