#include "wavemsa/sequences.hpp"

#include "wavemsa/errors.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

namespace wavemsa {

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

struct RawRecord {
    std::string id;
    std::string body;
    std::size_t header_line;
};

// Splits FASTA into records. `accept` validates one upper-cased character.
template <typename Accept>
std::vector<RawRecord> read_records(std::string_view text, Accept&& accept) {
    std::vector<RawRecord> out;
    std::size_t line_no = 0;
    while (!text.empty()) {
        auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '>') {
            auto header = trim(line.substr(1));
            auto space = header.find_first_of(" \t");
            out.push_back({std::string(header.substr(0, space)), {}, line_no});
            continue;
        }
        if (out.empty()) throw ParseError("sequence data before the first '>' header", line_no);
        for (char raw : line) {
            if (std::isspace(static_cast<unsigned char>(raw))) continue;
            char ch = static_cast<char>(std::toupper(static_cast<unsigned char>(raw)));
            if (!accept(ch))
                throw ParseError(std::string("illegal character '") + raw + "'", line_no);
            out.back().body += ch;
        }
    }
    if (out.empty()) throw ParseError("no FASTA records found", 0);
    for (const auto& r : out)
        if (r.body.empty()) throw ParseError("record '" + r.id + "' has an empty sequence", r.header_line);
    if (out.size() < 2) throw ParseError("need >= 2 sequences, found 1", out.front().header_line);
    return out;
}

bool is_residue(char c) { return c >= 'A' && c <= 'Z'; }

}  // namespace

std::string_view alphabet_symbols(Alphabet a) noexcept {
    switch (a) {
        case Alphabet::dna: return "ACGTN";
        case Alphabet::protein: return "ACDEFGHIKLMNPQRSTVWYBZXUO";
        case Alphabet::letters: break;
    }
    return "ABCDEFGHIJKLMNOPQRSTUVWXYZ";
}

Alphabet parse_alphabet(std::string_view name) {
    if (name == "dna") return Alphabet::dna;
    if (name == "protein") return Alphabet::protein;
    if (name == "letters" || name == "ascii") return Alphabet::letters;
    throw ConfigError("unknown alphabet '" + std::string(name) + "' (dna, protein, letters)");
}

SequenceSet::SequenceSet(std::vector<SequenceRecord> records, Alphabet alphabet)
    : records_(std::move(records)), alphabet_(alphabet) {
    if (records_.size() < 2) throw ConfigError("need >= 2 sequences");
    if (records_.size() > kMaxDims)
        throw ConfigError("at most " + std::to_string(kMaxDims) + " sequences are supported");
    auto symbols = alphabet_symbols(alphabet_);
    for (auto& r : records_) {
        if (r.residues.empty()) throw ConfigError("sequence '" + r.id + "' is empty");
        for (char& c : r.residues) {
            c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
            if (symbols.find(c) == std::string_view::npos)
                throw ConfigError("sequence '" + r.id + "' has illegal residue '" + c + "'");
        }
    }
}

Shape SequenceSet::shape() const {
    std::vector<std::size_t> dims;
    dims.reserve(records_.size());
    for (const auto& r : records_) dims.push_back(r.residues.size() + 1);
    return Shape(std::move(dims));
}

SequenceSet make_sequences(const std::vector<std::string>& residues, Alphabet alphabet) {
    std::vector<SequenceRecord> recs;
    for (std::size_t i = 0; i < residues.size(); ++i) recs.push_back({"s" + std::to_string(i), residues[i]});
    return SequenceSet(std::move(recs), alphabet);
}

SequenceSet parse_fasta(std::string_view text, Alphabet alphabet) {
    auto symbols = alphabet_symbols(alphabet);
    auto raw = read_records(text, [&](char c) { return symbols.find(c) != std::string_view::npos; });
    std::vector<SequenceRecord> recs;
    recs.reserve(raw.size());
    for (auto& r : raw) recs.push_back({std::move(r.id), std::move(r.body)});
    return SequenceSet(std::move(recs), alphabet);
}

SequenceSet read_fasta_file(const std::string& path, Alphabet alphabet) {
    return parse_fasta(read_file(path), alphabet);
}

std::size_t SubstitutionMatrix::slot(char x, char y) {
    if (!is_residue(x) || !is_residue(y))
        throw SchemeError(std::string("substitution matrix residue must be A-Z, got '") + x + "','" + y + "'");
    return static_cast<std::size_t>(x - 'A') * 26 + static_cast<std::size_t>(y - 'A');
}

void SubstitutionMatrix::set(char x, char y, double value) { table_[slot(x, y)] = value; }

std::optional<double> SubstitutionMatrix::get(char x, char y) const { return table_[slot(x, y)]; }

std::string SubstitutionMatrix::residues() const {
    std::string out;
    for (char c = 'A'; c <= 'Z'; ++c)
        if (table_[slot(c, c)]) out += c;
    return out;
}

SubstitutionMatrix parse_substitution_matrix(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    std::vector<char> header;
    SubstitutionMatrix m;
    std::size_t line_no = 0;
    std::vector<char> rows_seen;
    while (std::getline(in, line)) {
        ++line_no;
        auto t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        std::istringstream fields{std::string(t)};
        std::string tok;
        if (header.empty()) {
            while (fields >> tok) {
                if (tok.size() != 1) throw ParseError("matrix header entries must be single residues", line_no);
                header.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(tok[0]))));
            }
            continue;
        }
        if (!(fields >> tok) || tok.size() != 1) throw ParseError("matrix row must start with a residue", line_no);
        char row = static_cast<char>(std::toupper(static_cast<unsigned char>(tok[0])));
        for (char col : header) {
            double v = 0;
            if (!(fields >> v)) throw ParseError("matrix row is shorter than the header", line_no);
            try {
                m.set(row, col, v);
            } catch (const SchemeError& e) {
                throw ParseError(e.what(), line_no);
            }
        }
        if (fields >> tok) throw ParseError("matrix row is longer than the header", line_no);
        rows_seen.push_back(row);
    }
    if (header.empty()) throw ParseError("substitution matrix is empty", 0);
    std::vector<char> a = header, b = rows_seen;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    if (a != b) throw ParseError("substitution matrix must be square with matching row residues", 0);
    for (char x : header)
        for (char y : header)
            if (*m.get(x, y) != *m.get(y, x))
                throw SchemeError(std::string("substitution matrix is not symmetric at ") + x + "/" + y);
    return m;
}

double ScoringScheme::pair_score(char x, char y) const {
    const bool xg = x == kGap, yg = y == kGap;
    if ((!xg && !is_residue(x)) || (!yg && !is_residue(y)))
        throw SchemeError(std::string("symbol outside alphabet: '") + (xg ? y : x) + "'");
    if (xg && yg) return gap_gap;
    if (xg || yg) return gap;
    if (matrix)
        if (auto v = matrix->get(x, y)) return *v;
    return x == y ? match : mismatch;
}

bool ScoringScheme::is_integral() const {
    auto integral = [](double v) { return std::isfinite(v) && v == std::floor(v) && std::fabs(v) < 1e15; };
    if (!integral(match) || !integral(mismatch) || !integral(gap) || !integral(gap_gap)) return false;
    if (matrix)
        for (char x = 'A'; x <= 'Z'; ++x)
            for (char y = 'A'; y <= 'Z'; ++y)
                if (auto v = matrix->get(x, y); v && !integral(*v)) return false;
    return true;
}

std::uint64_t ScoringScheme::hash() const {
    // FNV-1a over the bit patterns of every value.
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&](double v) {
        auto bits = std::bit_cast<std::uint64_t>(v + 0.0);
        for (int i = 0; i < 8; ++i) {
            h ^= (bits >> (8 * i)) & 0xFF;
            h *= 1099511628211ULL;
        }
    };
    mix(match);
    mix(mismatch);
    mix(gap);
    mix(gap_gap);
    if (matrix)
        for (char x = 'A'; x <= 'Z'; ++x)
            for (char y = 'A'; y <= 'Z'; ++y)
                if (auto v = matrix->get(x, y)) {
                    mix(static_cast<double>(x * 26 + y));
                    mix(*v);
                }
    return h;
}

ScoringScheme parse_scheme(std::string_view text, const std::string& base_dir) {
    ScoringScheme s;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        auto eq = t.find('=');
        if (eq == std::string_view::npos) throw ParseError("expected key=value", line_no);
        std::string key(trim(t.substr(0, eq)));
        std::string value(trim(t.substr(eq + 1)));
        if (key == "matrix") {
            std::filesystem::path p(value);
            if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
            s.matrix = parse_substitution_matrix(read_file(p.string()));
            continue;
        }
        double v = 0;
        std::size_t used = 0;
        try {
            v = std::stod(value, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != value.size()) throw ParseError("value for '" + key + "' is not a number", line_no);
        if (key == "match") s.match = v;
        else if (key == "mismatch") s.mismatch = v;
        else if (key == "gap") s.gap = v;
        else if (key == "gapgap") s.gap_gap = v;
        else throw ParseError("unknown key '" + key + "'", line_no);
    }
    return s;
}

ScoringScheme load_scheme(const std::string& path) {
    auto dir = std::filesystem::path(path).parent_path().string();
    return parse_scheme(read_file(path), dir.empty() ? "." : dir);
}

double move_column_score(const ScoringScheme& scheme, const SequenceSet& seqs, const MultiIndex& cell,
                         const OffsetVector& d) {
    const std::size_t k = seqs.k();
    if (cell.size() != k || d.dims() != k) throw ContractViolation("cell and move must have k components");
    std::string column(k, kGap);
    for (std::size_t s = 0; s < k; ++s) {
        if (cell[s] > seqs[s].residues.size()) throw ContractViolation("cell outside the sequence shape");
        if (!d[s]) continue;
        if (cell[s] == 0) throw ContractViolation("move steps below the origin on axis " + std::to_string(s));
        column[s] = seqs[s].residues[cell[s] - 1];
    }
    double total = 0;
    for (std::size_t s = 0; s < k; ++s)
        for (std::size_t t = s + 1; t < k; ++t) total += scheme.pair_score(column[s], column[t]);
    return total;
}

void Alignment::validate() const {
    if (rows.size() != ids.size()) throw ContractViolation("alignment ids and rows differ in count");
    if (rows.empty()) return;
    const auto len = rows.front().size();
    for (const auto& r : rows)
        if (r.size() != len) throw ContractViolation("alignment rows are ragged");
    for (std::size_t c = 0; c < len; ++c) {
        bool all_gap = true;
        for (const auto& r : rows) all_gap = all_gap && r[c] == kGap;
        if (all_gap) throw ContractViolation("alignment column " + std::to_string(c) + " is all gaps");
    }
}

std::vector<std::string> Alignment::ungapped() const {
    std::vector<std::string> out;
    for (const auto& r : rows) {
        std::string s;
        std::copy_if(r.begin(), r.end(), std::back_inserter(s), [](char c) { return c != kGap; });
        out.push_back(std::move(s));
    }
    return out;
}

Alignment parse_aligned_fasta(std::string_view text) {
    auto raw = read_records(text, [](char c) { return is_residue(c) || c == kGap || c == '.'; });
    Alignment aln;
    for (auto& r : raw) {
        std::replace(r.body.begin(), r.body.end(), '.', kGap);
        if (!aln.rows.empty() && r.body.size() != aln.rows.front().size())
            throw ParseError("aligned row '" + r.id + "' has length " + std::to_string(r.body.size()) +
                                 ", expected " + std::to_string(aln.rows.front().size()),
                             r.header_line);
        aln.ids.push_back(std::move(r.id));
        aln.rows.push_back(std::move(r.body));
    }
    return aln;
}

void write_fasta(std::ostream& out, const Alignment& aln, std::size_t width) {
    for (std::size_t i = 0; i < aln.rows.size(); ++i) {
        out << '>' << (i < aln.ids.size() ? aln.ids[i] : "s" + std::to_string(i)) << '\n';
        const auto& row = aln.rows[i];
        for (std::size_t p = 0; p < row.size(); p += width) out << row.substr(p, width) << '\n';
    }
}

double similarity_score(const ScoringScheme& scheme, const Alignment& aln) {
    const auto len = aln.columns();
    for (const auto& r : aln.rows)
        if (r.size() != len) throw ContractViolation("alignment rows are ragged");
    double total = 0;
    for (std::size_t c = 0; c < len; ++c)
        for (std::size_t s = 0; s < aln.rows.size(); ++s)
            for (std::size_t t = s + 1; t < aln.rows.size(); ++t)
                total += scheme.pair_score(aln.rows[s][c], aln.rows[t][c]);
    return total;
}

}  // namespace wavemsa
