#include "wavemsa/cli.hpp"

#include "wavemsa/cost_model.hpp"
#include "wavemsa/dp_core.hpp"
#include "wavemsa/executor.hpp"
#include "wavemsa/partitioner.hpp"
#include "wavemsa/protocol_check.hpp"
#include "wavemsa/sequences.hpp"
#include "wavemsa/tensor_io.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>

namespace wavemsa {

namespace {

struct RunConfig {
    std::string input;
    std::string scheme_path;
    std::string alphabet = "letters";
    std::string mode = "sequential";
    std::optional<std::size_t> partition_size;
    std::optional<std::size_t> workers;
    std::string policy = "block";
    std::string output;
    std::string report;
    std::string dump;
    std::string event_log;
    std::optional<Offset> memory_cap;
};

std::string format_score(double v) {
    std::ostringstream s;
    if (v == std::floor(v) && std::fabs(v) < 1e15) s << static_cast<long long>(v);
    else s << std::setprecision(12) << v;
    return s.str();
}

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot write '" + path + "'");
    return f;
}

ScoringScheme scheme_from(const std::string& path) { return path.empty() ? ScoringScheme{} : load_scheme(path); }

std::string grid_label(const MultiIndex& g) {
    std::string s;
    for (std::size_t i = 0; i < g.size(); ++i) s += (i ? ":" : "") + std::to_string(g[i]);
    return s;
}

std::vector<std::size_t> parse_list(const std::string& text) {
    std::vector<std::size_t> out;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stoull(tok, &used));
            if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw ConfigError("malformed list '" + text + "'");
        }
    }
    if (out.empty()) throw ConfigError("empty list");
    return out;
}

std::pair<std::size_t, std::size_t> parse_range(const std::string& text) {
    auto dots = text.find("..");
    if (dots == std::string::npos) {
        auto v = parse_list(text).front();
        return {v, v};
    }
    auto lo = parse_list(text.substr(0, dots)).front();
    auto hi = parse_list(text.substr(dots + 2)).front();
    if (hi < lo) throw ConfigError("empty range '" + text + "'");
    return {lo, hi};
}

template <typename Score>
void run_align(const RunConfig& cfg, const SequenceSet& seqs, const ScoringScheme& scheme, std::ostream& out) {
    const Offset cap = cfg.memory_cap.value_or(default_max_cells());
    Alignment aln;
    Score terminal{};
    std::optional<ScoreTensor<Score>> tensor;
    if (cfg.mode == "sequential") {
        tensor.emplace(score_sequential<Score>(seqs, scheme, cap));
        terminal = tensor->terminal_value();
        aln = traceback(*tensor, seqs);
    } else {
        ExecutorOptions opts;
        opts.partition_size = *cfg.partition_size;
        opts.workers = *cfg.workers;
        opts.policy = parse_schedule_policy(cfg.policy);
        opts.max_cells = cap;
        opts.record_events = !cfg.event_log.empty();
        auto res = run_parallel<Score>(seqs, scheme, opts);
        terminal = res.report.terminal_score;
        aln = std::move(res.alignment);
        if (!cfg.report.empty()) {
            auto f = open_out(cfg.report);
            write_report_csv(f, res.report);
        }
        if (!cfg.event_log.empty()) {
            auto f = open_out(cfg.event_log);
            write_event_log(f, res.report.events, PartitionGrid(seqs.shape(), opts.partition_size));
        }
        out << "workers=" << opts.workers << " partitions=" << PartitionGrid(seqs.shape(), opts.partition_size).total_partitions()
            << " messages=" << res.report.total_messages() << " payload_cells=" << res.report.total_payload() << '\n';
        for (const auto& w : res.report.warnings) out << "warning: " << w << '\n';
        tensor.emplace(std::move(res.tensor));
    }
    if (!cfg.dump.empty()) {
        auto f = open_out(cfg.dump);
        write_tensor_dump(f, *tensor, scheme.hash());
    }
    out << "terminal_score=" << format_score(static_cast<double>(terminal)) << '\n';
    out << "similarity_score=" << format_score(similarity_score(scheme, aln)) << '\n';
    if (cfg.output.empty()) {
        write_fasta(out, aln);
    } else {
        auto f = open_out(cfg.output);
        write_fasta(f, aln);
    }
}

void cmd_align(const RunConfig& cfg, std::ostream& out) {
    if (cfg.mode != "sequential" && cfg.mode != "parallel") throw ConfigError("mode must be sequential or parallel");
    if (cfg.mode == "parallel" && (!cfg.partition_size || !cfg.workers))
        throw ConfigError("parallel mode requires --partition-size and --workers");
    const auto seqs = read_fasta_file(cfg.input, parse_alphabet(cfg.alphabet));
    const auto scheme = scheme_from(cfg.scheme_path);
    if (scheme.is_integral()) run_align<std::int64_t>(cfg, seqs, scheme, out);
    else run_align<double>(cfg, seqs, scheme, out);
}

struct PlanConfig {
    std::string shape;
    std::string input;
    std::size_t partition_size = 0;
    std::size_t workers = 1;
    std::string policy = "block";
    bool table1 = false;
    std::string k_range = "2..9";
    std::size_t waves = 9;
    std::string edges;
};

void cmd_plan(const PlanConfig& cfg, std::ostream& out) {
    if (cfg.table1) {
        const auto [k_lo, k_hi] = parse_range(cfg.k_range);
        out << "k";
        for (std::size_t w = 1; w <= cfg.waves; ++w) out << ",wave" << w;
        out << '\n';
        for (std::size_t k = k_lo; k <= k_hi; ++k) {
            out << k;
            for (std::size_t w = 0; w < cfg.waves; ++w) out << ',' << count_wave(k, w);
            out << '\n';
        }
        return;
    }
    if (cfg.shape.empty() == cfg.input.empty()) throw ConfigError("plan needs exactly one of --shape or --input");
    if (cfg.partition_size == 0) throw ConfigError("plan needs --partition-size");
    const Shape shape = cfg.shape.empty() ? read_fasta_file(cfg.input).shape() : parse_shape(cfg.shape);
    const PartitionGrid grid(shape, cfg.partition_size);
    const WaveSchedule sched(grid, cfg.workers, parse_schedule_policy(cfg.policy));

    std::string label = shape.to_string();
    std::replace(label.begin(), label.end(), ',', 'x');
    out << "shape,S,P,t\n" << label << ',' << cfg.partition_size << ',' << grid.total_partitions() << ','
        << grid.wave_count() << "\n\n";
    out << "wave,partitions\n";
    for (std::size_t w = 0; w < grid.wave_count(); ++w) out << w << ',' << sched.waves()[w].size() << '\n';

    if (!cfg.edges.empty()) {
        auto f = open_out(cfg.edges);
        f << "from,to,offset,from_wave,to_wave,from_worker,to_worker\n";
        for (const auto& e : dependency_edges(grid))
            f << grid_label(e.from) << ',' << grid_label(e.to) << ',' << e.offset.to_string() << ',' << e.from.sum()
              << ',' << e.to.sum() << ',' << sched.owner(grid, e.from) << ',' << sched.owner(grid, e.to) << '\n';
    }
}

struct EstimateConfig {
    std::string shape;
    std::size_t partition_size = 0;
    std::size_t workers = 1;
    std::string policy = "block";
    double r = 1;
    double c = 0;
    std::string allocation;
    bool sweep = false;
    double r_unit = 1e-9;
    double c_unit = 1e-8;
    bool calibrate = false;
};

void cmd_estimate(EstimateConfig cfg, std::ostream& out) {
    if (cfg.shape.empty()) throw ConfigError("estimate needs --shape");
    const Shape shape = parse_shape(cfg.shape);
    const auto policy = parse_schedule_policy(cfg.policy);
    if (cfg.calibrate) {
        const auto cal = calibrate();
        cfg.r_unit = cal.r_unit;
        cfg.c_unit = cal.c_unit;
        out << "r_unit=" << cal.r_unit << " c_unit=" << cal.c_unit << '\n';
    }
    if (cfg.sweep) {
        out << "S,P,t,max_pm,dT_corrected,dT_printed\n";
        for (const auto& row : sweep_partition_sizes(shape, cfg.workers, cfg.r_unit, cfg.c_unit, policy))
            out << row.partition_size << ',' << row.partitions << ',' << row.waves << ',' << row.max_pm << ','
                << row.dt_corrected << ',' << row.dt_printed << '\n';
        out << "recommended_S=" << recommend_partition_size(shape, cfg.workers, cfg.r_unit, cfg.c_unit, policy)
            << '\n';
        return;
    }
    if (cfg.partition_size == 0) throw ConfigError("estimate needs --partition-size (or --sweep)");
    const PartitionGrid grid(shape, cfg.partition_size);
    const WaveSchedule sched(grid, cfg.workers, policy);
    CostParams params = make_cost_params(sched, cfg.r, cfg.c);
    std::vector<std::uint64_t> sent = cells_sent_per_worker(grid, sched);
    if (!cfg.allocation.empty()) {
        auto alloc = parse_list(cfg.allocation);
        if (alloc.size() != cfg.workers) throw ConfigError("--allocation needs one count per worker");
        params.allocation = std::move(alloc);
    }
    params.validate();
    const auto gran = granularity(params, sent);
    out << "P,max_pm,dT_corrected,dT_printed,R,C,R_over_C\n"
        << params.total_partitions << ','
        << *std::max_element(params.allocation.begin(), params.allocation.end()) << ',' << predict_dt(params, true)
        << ',' << predict_dt(params, false) << ',' << gran.R << ',' << gran.C << ',';
    if (gran.ratio) out << *gran.ratio;
    else out << "undefined";
    out << '\n';
}

void cmd_score(const std::string& input, const std::string& scheme_path, std::ostream& out) {
    std::ifstream in(input, std::ios::binary);
    if (!in) throw ConfigError("cannot open '" + input + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    const Alignment aln = parse_aligned_fasta(ss.str());
    out << "similarity_score=" << format_score(similarity_score(scheme_from(scheme_path), aln)) << '\n';
}

struct BenchConfig {
    std::string input;
    std::string random = "3x12";
    std::uint64_t seed = 1;
    std::size_t partition_size = 3;
    std::string workers = "1,2,4";
    std::size_t repeats = 3;
    std::string policy = "block";
};

SequenceSet random_sequences(const std::string& desc, std::uint64_t seed) {
    const auto x = desc.find('x');
    if (x == std::string::npos) throw ConfigError("--random expects KxLEN, e.g. 3x12");
    const auto k = parse_list(desc.substr(0, x)).front();
    const auto len = parse_list(desc.substr(x + 1)).front();
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> pick(0, 3);
    std::vector<std::string> rows(k);
    for (auto& r : rows)
        for (std::size_t i = 0; i < len; ++i) r += "ACGT"[pick(rng)];
    return make_sequences(rows, Alphabet::dna);
}

void cmd_bench(const BenchConfig& cfg, std::ostream& out, std::ostream& err) {
    const auto seqs = cfg.input.empty() ? random_sequences(cfg.random, cfg.seed) : read_fasta_file(cfg.input);
    const auto scheme = ScoringScheme{};
    const auto workers = parse_list(cfg.workers);
    if (seqs.shape().cell_count() < 10'000)
        err << "warning: instance has only " << seqs.shape().cell_count() << " cells; timings are noise\n";
    const auto reference = score_sequential<std::int64_t>(seqs, scheme).terminal_value();
    out << "V,elapsed_ns,speedup,idle_workers\n";
    double base = 0;
    for (std::size_t i = 0; i < workers.size(); ++i) {
        ExecutorOptions opts;
        opts.partition_size = cfg.partition_size;
        opts.workers = workers[i];
        opts.policy = parse_schedule_policy(cfg.policy);
        std::vector<double> times;
        std::size_t idle = 0;
        for (std::size_t r = 0; r < std::max<std::size_t>(cfg.repeats, 1); ++r) {
            const auto t0 = std::chrono::steady_clock::now();
            auto res = run_parallel<std::int64_t>(seqs, scheme, opts);
            times.push_back(std::chrono::duration<double, std::nano>(std::chrono::steady_clock::now() - t0).count());
            if (res.report.terminal_score != reference)
                throw ExecutionError("parallel score differs from the sequential score at V=" +
                                     std::to_string(workers[i]));
            idle = res.report.idle_workers();
        }
        std::sort(times.begin(), times.end());
        const double median = times[times.size() / 2];
        if (i == 0) base = median;
        out << workers[i] << ',' << static_cast<std::uint64_t>(median) << ',' << std::fixed << std::setprecision(3)
            << base / median << std::defaultfloat << ',' << idle << '\n';
    }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"k-dimensional dynamic-programming multiple sequence alignment with wavefront partitioning"};
    app.require_subcommand(1);

    RunConfig run;
    auto* align = app.add_subcommand("align", "score the alignment tensor and trace back an optimal alignment");
    align->add_option("-i,--input", run.input, "FASTA input")->required();
    align->add_option("--scheme", run.scheme_path, "scheme config (match, mismatch, gap, gapgap, matrix)");
    align->add_option("--alphabet", run.alphabet, "dna, protein or letters");
    align->add_option("--mode", run.mode, "sequential or parallel");
    align->add_option("-S,--partition-size", run.partition_size, "cells per partition side");
    align->add_option("-V,--workers", run.workers, "worker threads");
    align->add_option("--policy", run.policy, "block or round-robin");
    align->add_option("-o,--output", run.output, "aligned FASTA output (default stdout)");
    align->add_option("--report", run.report, "per-wave report CSV (parallel mode)");
    align->add_option("--dump", run.dump, "tensor dump path");
    align->add_option("--event-log", run.event_log, "protocol event log (parallel mode)");
    align->add_option("--memory-cap", run.memory_cap, "maximum tensor cells");

    PlanConfig plan;
    auto* plan_cmd = app.add_subcommand("plan", "partition grid, per-wave counts and dependency edges");
    plan_cmd->add_option("--shape", plan.shape, "tensor shape, e.g. 9,9,9,9");
    plan_cmd->add_option("-i,--input", plan.input, "FASTA input to derive the shape");
    plan_cmd->add_option("-S,--partition-size", plan.partition_size);
    plan_cmd->add_option("-V,--workers", plan.workers);
    plan_cmd->add_option("--policy", plan.policy);
    plan_cmd->add_flag("--table1", plan.table1, "unbounded partitions-per-wave matrix");
    plan_cmd->add_option("--k", plan.k_range, "dimension range for --table1, e.g. 2..9");
    plan_cmd->add_option("--waves", plan.waves, "wave columns for --table1");
    plan_cmd->add_option("--edges", plan.edges, "write the dependency edge list CSV here");

    EstimateConfig est;
    auto* est_cmd = app.add_subcommand("estimate", "distributed execution time model");
    est_cmd->add_option("--shape", est.shape)->required();
    est_cmd->add_option("-S,--partition-size", est.partition_size);
    est_cmd->add_option("-V,--workers", est.workers);
    est_cmd->add_option("--policy", est.policy);
    est_cmd->add_option("--r", est.r, "seconds per partition");
    est_cmd->add_option("--c", est.c, "seconds per communication unit");
    est_cmd->add_option("--allocation", est.allocation, "explicit partitions per worker, e.g. 8,8");
    est_cmd->add_flag("--sweep", est.sweep, "evaluate every partition size");
    est_cmd->add_option("--r-unit", est.r_unit, "seconds per cell-neighbour evaluation (sweep)");
    est_cmd->add_option("--c-unit", est.c_unit, "seconds per communicated cell (sweep)");
    est_cmd->add_flag("--calibrate", est.calibrate, "measure r-unit and c-unit on this machine");

    std::string score_input, score_scheme;
    auto* score_cmd = app.add_subcommand("score", "sum-of-pairs similarity of an aligned FASTA");
    score_cmd->add_option("-i,--input", score_input)->required();
    score_cmd->add_option("--scheme", score_scheme);

    BenchConfig bench;
    auto* bench_cmd = app.add_subcommand("bench", "elapsed time across worker counts");
    bench_cmd->add_option("-i,--input", bench.input);
    bench_cmd->add_option("--random", bench.random, "random DNA instance KxLEN");
    bench_cmd->add_option("--seed", bench.seed);
    bench_cmd->add_option("-S,--partition-size", bench.partition_size);
    bench_cmd->add_option("-V,--workers", bench.workers, "comma-separated worker counts");
    bench_cmd->add_option("--repeats", bench.repeats);
    bench_cmd->add_option("--policy", bench.policy);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*align) cmd_align(run, out);
        else if (*plan_cmd) cmd_plan(plan, out);
        else if (*est_cmd) cmd_estimate(est, out);
        else if (*score_cmd) cmd_score(score_input, score_scheme, out);
        else if (*bench_cmd) cmd_bench(bench, out, err);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

}  // namespace wavemsa
