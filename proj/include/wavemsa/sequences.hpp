#pragma once

#include "wavemsa/moa_index.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace wavemsa {

inline constexpr char kGap = '-';

enum class Alphabet { dna, protein, letters };

[[nodiscard]] std::string_view alphabet_symbols(Alphabet a) noexcept;
[[nodiscard]] Alphabet parse_alphabet(std::string_view name);

struct SequenceRecord {
    std::string id;
    std::string residues;  // upper case, no gaps
};

/// k >= 2 non-empty sequences over one alphabet.
class SequenceSet {
public:
    SequenceSet(std::vector<SequenceRecord> records, Alphabet alphabet = Alphabet::letters);

    [[nodiscard]] std::size_t k() const noexcept { return records_.size(); }
    [[nodiscard]] const SequenceRecord& operator[](std::size_t i) const { return records_[i]; }
    [[nodiscard]] const std::vector<SequenceRecord>& records() const noexcept { return records_; }
    [[nodiscard]] Alphabet alphabet() const noexcept { return alphabet_; }
    /// (len_0 + 1, ..., len_{k-1} + 1)
    [[nodiscard]] Shape shape() const;

private:
    std::vector<SequenceRecord> records_;
    Alphabet alphabet_;
};

/// Convenience for tests and tools: ids are "s0", "s1", ...
SequenceSet make_sequences(const std::vector<std::string>& residues,
                           Alphabet alphabet = Alphabet::letters);

/// Reads FASTA: '>' headers, sequence lines, blank lines ignored, case
/// folded to upper. Errors carry the offending line number.
SequenceSet parse_fasta(std::string_view text, Alphabet alphabet = Alphabet::letters);
SequenceSet read_fasta_file(const std::string& path, Alphabet alphabet = Alphabet::letters);

/// Square residue table; entries not listed fall back to match/mismatch.
class SubstitutionMatrix {
public:
    void set(char x, char y, double value);
    [[nodiscard]] std::optional<double> get(char x, char y) const;
    [[nodiscard]] std::string residues() const;

private:
    static std::size_t slot(char x, char y);
    std::array<std::optional<double>, 26 * 26> table_{};
};

/// Whitespace-separated square matrix with a header row of residues; every
/// following line starts with its row residue. Must be symmetric.
SubstitutionMatrix parse_substitution_matrix(std::string_view text);

/// Sum-of-pairs column scoring. Defaults: match +1, mismatch 0, gap -1,
/// gap/gap 0.
struct ScoringScheme {
    double match = 1;
    double mismatch = 0;
    double gap = -1;
    double gap_gap = 0;
    std::optional<SubstitutionMatrix> matrix;

    /// Residue/residue, residue/gap or gap/gap. Throws SchemeError for
    /// anything that is neither an upper-case letter nor the gap symbol.
    [[nodiscard]] double pair_score(char x, char y) const;
    /// True when every value the scheme can produce is an integer.
    [[nodiscard]] bool is_integral() const;
    /// Stable 64-bit fingerprint of the scheme's values.
    [[nodiscard]] std::uint64_t hash() const;
};

/// Keys: match, mismatch, gap, gapgap, matrix=path (relative to the file).
ScoringScheme load_scheme(const std::string& path);
ScoringScheme parse_scheme(std::string_view text, const std::string& base_dir = ".");

/// Score of the column produced by stepping into `cell` along `d`: sequence
/// s contributes residue cell_s - 1 when d_s is set and a gap otherwise.
double move_column_score(const ScoringScheme& scheme, const SequenceSet& seqs,
                         const MultiIndex& cell, const OffsetVector& d);

/// k gapped rows of equal length.
struct Alignment {
    std::vector<std::string> ids;
    std::vector<std::string> rows;

    [[nodiscard]] std::size_t columns() const { return rows.empty() ? 0 : rows.front().size(); }
    /// Throws ContractViolation on ragged rows or an all-gap column.
    void validate() const;
    [[nodiscard]] std::vector<std::string> ungapped() const;
    friend bool operator==(const Alignment&, const Alignment&) = default;
};

/// Aligned FASTA: rows may contain '-' and must share one length.
Alignment parse_aligned_fasta(std::string_view text);
void write_fasta(std::ostream& out, const Alignment& aln, std::size_t width = 60);

/// Sum over columns of sum over unordered row pairs of pair_score.
double similarity_score(const ScoringScheme& scheme, const Alignment& aln);

}  // namespace wavemsa
