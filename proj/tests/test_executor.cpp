#include "test_support.hpp"
#include "wavemsa/executor.hpp"
#include "wavemsa/protocol_check.hpp"
#include "wavemsa/tensor_io.hpp"

#include <doctest.h>

#include <random>
#include <set>
#include <sstream>

using namespace wavemsa;

namespace {

// Single-threaded stand-in for the exchange: runs every partition on its
// scheduled worker and delivers outgoing cells after each wave.
template <typename Score>
struct Simulation {
    std::vector<BlockStore<Score>> blocks;
    std::vector<OcinStore<Score>> ocin;
    std::map<std::size_t, PartitionOutput<Score>> outputs;  // blocks moved out

    Simulation(const RunContext<Score>& ctx, bool retain_ocin = true)
        : blocks(ctx.sched.workers()), ocin(ctx.sched.workers()) {
        for (std::size_t w = 0; w < ctx.grid.wave_count(); ++w) {
            std::vector<DependencyMessage<Score>> pending;
            for (const auto& part : ctx.sched.waves()[w]) {
                const auto flat = ctx.grid.flat(part.grid);
                const auto m = ctx.sched.owner(flat);
                auto res = compute_partition(ctx, m, part, blocks[m], ocin[m]);
                for (auto& [dest, cells] : res.outgoing) pending.push_back({m, dest, w, ExchangePhase::none, cells});
                blocks[m].emplace(flat, res.block);
                outputs.emplace(flat, std::move(res));
            }
            if (!retain_ocin)
                for (auto& o : ocin) o = OcinStore<Score>{};
            for (const auto& msg : pending) ocin[msg.destination].deliver(msg);
        }
    }

    std::vector<const ScoreBlock<Score>*> all_blocks() const {
        std::vector<const ScoreBlock<Score>*> out;
        for (const auto& store : blocks)
            for (const auto& [id, b] : store) out.push_back(&b);
        return out;
    }
};

ExecutorOptions opts(std::size_t S, std::size_t V, SchedulePolicy policy = SchedulePolicy::block) {
    ExecutorOptions o;
    o.partition_size = S;
    o.workers = V;
    o.policy = policy;
    return o;
}

}  // namespace

TEST_CASE("run_parallel examples") {
    const ScoringScheme s;
    const auto four = make_sequences({"ACGTACGT", "ACGTACGT", "ACGTACGT", "ACGTACGT"});
    const auto seq4 = score_sequential<std::int64_t>(four, s);
    const auto par4 = run_parallel<std::int64_t>(four, s, opts(3, 4));
    CHECK(par4.report.terminal_score == seq4.terminal_value());
    CHECK(par4.tensor == seq4);

    CHECK(run_parallel<std::int64_t>(make_sequences({"AC", "AC"}), s, opts(2, 2)).report.terminal_score == 2);

    const auto pair = make_sequences({"GATTACA", "GCATGCA"});
    const auto one = run_parallel<std::int64_t>(pair, s, opts(3, 1));
    CHECK(one.tensor == score_sequential<std::int64_t>(pair, s));
    CHECK(one.report.total_messages() == 0);
    CHECK(one.report.total_payload() == 0);
}

TEST_CASE("single partition covering the whole tensor") {
    const ScoringScheme s;
    const auto seqs = make_sequences({"AC", "AC"});
    const RunContext<std::int64_t> ctx(seqs, s, 3, 1, SchedulePolicy::block);
    CHECK(ctx.grid.total_partitions() == 1);
    BlockStore<std::int64_t> none;
    OcinStore<std::int64_t> ocin;
    const auto out = compute_partition(ctx, 0, ctx.grid.partition(MultiIndex{0, 0}), none, ocin);
    CHECK(out.cells_computed == 9);
    CHECK(out.outgoing.empty());
    const auto tensor = assemble_global<std::int64_t>(ctx.grid, {&out.block});
    CHECK(tensor == score_sequential<std::int64_t>(seqs, s));
}

TEST_CASE("outgoing cells are exactly the remotely needed face") {
    const ScoringScheme s;
    const auto seqs = make_sequences({"ACGTACGT", "AGGTCCGT"});
    const RunContext<std::int64_t> ctx(seqs, s, 3, 2, SchedulePolicy::block);
    BlockStore<std::int64_t> none;
    OcinStore<std::int64_t> ocin;
    const auto out = compute_partition(ctx, 0, ctx.grid.partition(MultiIndex{0, 0}), none, ocin);
    REQUIRE(out.outgoing.size() == 1);
    REQUIRE(out.outgoing.count(1) == 1);

    std::set<MultiIndex> got;
    for (const auto& rec : out.outgoing.at(1)) got.insert(unflatten(ctx.grid.shape(), rec.offset));
    CHECK(got == std::set<MultiIndex>{MultiIndex{2, 0}, MultiIndex{2, 1}, MultiIndex{2, 2}});

    // same set from neighbour ownership
    std::set<MultiIndex> want;
    const Box owned = ctx.grid.owned_box(MultiIndex{0, 0});
    for (Offset o = 0; o < ctx.grid.shape().cell_count(); ++o) {
        const auto cell = unflatten(ctx.grid.shape(), o);
        if (!owned.contains(cell)) continue;
        for (const auto& [d, n] : higher_neighbors(ctx.grid.shape(), cell))
            if (ctx.sched.owner(ctx.grid, owner_of_cell(ctx.grid, n)) == 1) want.insert(cell);
    }
    CHECK(got == want);
    for (const auto& c : got) CHECK((c[0] == 2 || c[1] == 2));
}

TEST_CASE("received cells are retained across waves") {
    // (1,1,1) at wave 3 reads the corner computed by (0,0,0) at wave 0
    const ScoringScheme s;
    const auto seqs = make_sequences({"ACG", "AGG", "CCG"});
    const RunContext<std::int64_t> ctx(seqs, s, 2, 4, SchedulePolicy::block);
    REQUIRE(ctx.sched.owner(ctx.grid, MultiIndex{0, 0, 0}) != ctx.sched.owner(ctx.grid, MultiIndex{1, 1, 1}));

    const Simulation<std::int64_t> sim(ctx);
    const auto& late = sim.outputs.at(ctx.grid.flat(MultiIndex{1, 1, 1}));
    CHECK(late.block.partition().wave == 3);
    CHECK(late.consumed_remote > 0);
    CHECK(late.earliest_delivery_wave == 0);
    CHECK(assemble_global(ctx.grid, sim.all_blocks()) == score_sequential<std::int64_t>(seqs, s));

    CHECK_THROWS_AS(Simulation<std::int64_t>(ctx, false), DependencyError);
    CHECK(run_parallel<std::int64_t>(seqs, s, opts(2, 4)).tensor == score_sequential<std::int64_t>(seqs, s));
}

TEST_CASE("assembled tensor equals the sequential tensor") {
    std::mt19937_64 rng(2024);
    const std::vector<std::size_t> worker_counts{1, 2, 3, 4, 8};
    for (std::size_t k = 2; k <= 4; ++k)
        for (std::size_t S = 2; S <= 3; ++S)
            for (auto V : worker_counts)
                for (int trial = 0; trial < 2; ++trial) {
                    const auto seqs = testing::random_sequences(rng, k, S - 1, 6);
                    const auto scheme = testing::random_scheme(rng);
                    const auto policy = trial == 0 ? SchedulePolicy::block : SchedulePolicy::round_robin;
                    const auto par = run_parallel<std::int64_t>(seqs, scheme, opts(S, V, policy));
                    const auto seq = score_sequential<std::int64_t>(seqs, scheme);
                    REQUIRE(par.tensor == seq);
                    REQUIRE(par.alignment == traceback(seq, seqs));
                    REQUIRE(par.report.warnings.empty());
                    std::uint64_t cells = 0;
                    for (auto c : par.report.cells_computed) cells += c;
                    REQUIRE(cells == seq.shape().cell_count());
                }
}

TEST_CASE("real-valued parallel run") {
    ScoringScheme s;
    s.match = 2.5;
    s.mismatch = -0.5;
    s.gap = -1.25;
    const auto seqs = make_sequences({"ACGTTG", "AGTTG", "ACTTGG"});
    const auto par = run_parallel<double>(seqs, s, opts(3, 3));
    CHECK(par.tensor == score_sequential<double>(seqs, s));
}

TEST_CASE("message volume") {
    std::mt19937_64 rng(5);
    for (std::size_t k = 2; k <= 3; ++k)
        for (std::size_t V : {1, 2, 3, 4}) {
            const auto seqs = testing::random_sequences(rng, k, 6, 10);
            const auto par = run_parallel<std::int64_t>(seqs, ScoringScheme{}, opts(3, V));
            const auto grid = build_grid(seqs.shape(), 3);
            const auto bound = overlap_cells_oracle(grid) * ((std::uint64_t{1} << k) - 1);
            CHECK(par.report.total_payload() <= bound);
            CHECK(par.report.cells_sent == cells_sent_per_worker(grid, schedule(grid, V)));
            if (V == 1) CHECK(par.report.total_payload() == 0);
        }
}

TEST_CASE("exchange phases follow rank direction") {
    auto o = opts(3, 2);
    o.record_events = true;
    const auto par = run_parallel<std::int64_t>(make_sequences({"ACGTACGT", "ACGAACGT"}), ScoringScheme{}, o);
    std::size_t sends = 0;
    for (const auto& e : par.report.events) {
        if (e.kind != EventKind::send) continue;
        ++sends;
        CHECK(e.peer != static_cast<long>(e.worker));
        CHECK(e.phase == (e.peer < static_cast<long>(e.worker) ? ExchangePhase::downward : ExchangePhase::upward));
    }
    CHECK(sends == par.report.total_messages());
    CHECK(sends > 0);

    OcinStore<std::int64_t> store;
    CHECK_THROWS_AS(store.deliver({1, 1, 0, ExchangePhase::downward, {{0, 0, 0}}}), ContractViolation);
}

TEST_CASE("protocol properties hold over recorded runs") {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 12; ++trial) {
        const std::size_t k = 2 + trial % 3;
        const std::size_t V = 1 + trial % 4;
        const auto seqs = testing::random_sequences(rng, k, 2, 6);
        auto o = opts(2 + trial % 2, V);
        o.record_events = true;
        const auto par = run_parallel<std::int64_t>(seqs, testing::random_scheme(rng), o);
        const auto rep = check_protocol(par.report.events, build_grid(seqs.shape(), o.partition_size));
        INFO((rep.violations.empty() ? std::string() : rep.violations.front()));
        REQUIRE(rep.ok());
        if (V == 1) REQUIRE(rep.messages == 0);
    }
}

TEST_CASE("protocol checker catches violations") {
    const auto seqs = make_sequences({"ACGTAC", "ACTTAC", "AGGTAC"});
    auto o = opts(3, 3);
    o.record_events = true;
    const auto par = run_parallel<std::int64_t>(seqs, ScoringScheme{}, o);
    const auto grid = build_grid(seqs.shape(), 3);
    REQUIRE(check_protocol(par.report.events, grid).ok());

    auto early = par.report.events;
    for (auto& e : early)
        if (e.kind == EventKind::consume) {
            e.value = e.wave;  // claims a delivery from the same wave
            break;
        }
    CHECK_FALSE(check_protocol(early, grid).consumed_after_delivery);

    auto reordered = par.report.events;
    for (std::size_t i = 0; i < reordered.size(); ++i)
        if (reordered[i].kind == EventKind::compute_begin && reordered[i].wave > 0) {
            reordered[i].seq = 0;  // starts before wave 0 finished
            std::stable_sort(reordered.begin(), reordered.end(),
                             [](const Event& a, const Event& b) { return a.seq < b.seq; });
            break;
        }
    CHECK_FALSE(check_protocol(reordered, grid).wave_safe);

    auto lost = par.report.events;
    std::erase_if(lost, [](const Event& e) { return e.kind == EventKind::send; });
    CHECK_FALSE(check_protocol(lost, grid).sends_precede_deliveries);

    // two workers each waiting on the other within one phase
    std::vector<Event> cyc{
        {0, 0, 0, EventKind::send, -1, 1, ExchangePhase::downward, 1, 0},
        {1, 1, 0, EventKind::send, -1, 0, ExchangePhase::downward, 1, 0},
        {2, 1, 0, EventKind::deliver, -1, 0, ExchangePhase::downward, 1, 0},
        {3, 0, 0, EventKind::deliver, -1, 1, ExchangePhase::downward, 1, 0},
    };
    CHECK_FALSE(check_protocol(cyc, build_grid(Shape{3, 3}, 3)).wait_for_acyclic);
}

TEST_CASE("assembly rejects inconsistent blocks") {
    const ScoringScheme s;
    const auto seqs = make_sequences({"ACGTACGT", "AGGTCCGT"});
    const RunContext<std::int64_t> ctx(seqs, s, 3, 2, SchedulePolicy::block);
    Simulation<std::int64_t> sim(ctx);
    REQUIRE(assemble_global(ctx.grid, sim.all_blocks()) == score_sequential<std::int64_t>(seqs, s));

    // shared corner (2,4) is covered by four blocks, all agreeing
    const MultiIndex corner{2, 4};
    std::size_t copies = 0;
    const auto expected = score_sequential<std::int64_t>(seqs, s).at(corner);
    for (const auto* b : sim.all_blocks())
        if (b->box().contains(corner)) {
            ++copies;
            CHECK(b->value(b->local_offset(corner)) == expected);
        }
    CHECK(copies == 4);

    auto& block = sim.blocks[ctx.sched.owner(ctx.grid, MultiIndex{1, 2})].at(ctx.grid.flat(MultiIndex{1, 2}));
    const auto local = block.local_offset(corner);
    block.set(local, block.value(local) + 1, block.move(local));
    CHECK_THROWS_AS(assemble_global(ctx.grid, sim.all_blocks()), ConsistencyError);

    auto partial = sim.all_blocks();
    partial.pop_back();
    CHECK_THROWS_AS(assemble_global(ctx.grid, partial), ConsistencyError);
}

TEST_CASE("missing dependency names the cell and its source") {
    const RunContext<std::int64_t> ctx(make_sequences({"ACGTACGT", "AGGTCCGT"}), ScoringScheme{}, 3, 2,
                                       SchedulePolicy::block);
    BlockStore<std::int64_t> none;
    OcinStore<std::int64_t> empty;
    try {
        (void)compute_partition(ctx, 1, ctx.grid.partition(MultiIndex{1, 0}), none, empty);
        FAIL("expected a dependency error");
    } catch (const DependencyError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("(2,0)") != std::string::npos);
        CHECK(msg.find("worker 0") != std::string::npos);
    }
}

TEST_CASE("worker failure aborts with wave and partition") {
    const auto seqs = make_sequences({"ACGTACGT", "AGGTCCGT", "ACGTCCGT"});
    auto o = opts(3, 3);
    o.before_partition = [](std::size_t wave, const PartitionId& p, std::size_t) {
        if (wave == 2 && p.grid == MultiIndex{1, 1, 0}) throw std::runtime_error("injected");
    };
    try {
        (void)run_parallel<std::int64_t>(seqs, ScoringScheme{}, o);
        FAIL("expected an execution error");
    } catch (const ExecutionError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("wave 2") != std::string::npos);
        CHECK(msg.find("(1,1,0)") != std::string::npos);
        CHECK(msg.find("injected") != std::string::npos);
    }
    o.before_partition = [](std::size_t wave, const PartitionId&, std::size_t) {
        if (wave == 1) throw DependencyError("lost");
    };
    CHECK_THROWS_AS(run_parallel<std::int64_t>(seqs, ScoringScheme{}, o), DependencyError);
}

TEST_CASE("runs are deterministic") {
    const auto seqs = make_sequences({"ACGTTGCA", "ACGTGCA", "AGTTGCAA"});
    auto o = opts(3, 4);
    const auto a = run_parallel<std::int64_t>(seqs, ScoringScheme{}, o);
    const auto b = run_parallel<std::int64_t>(seqs, ScoringScheme{}, o);
    CHECK(a.alignment == b.alignment);
    CHECK(a.report.cells_computed == b.report.cells_computed);
    CHECK(a.report.cells_sent == b.report.cells_sent);
    for (std::size_t w = 0; w < a.report.waves.size(); ++w) {
        CHECK(a.report.waves[w].messages == b.report.waves[w].messages);
        CHECK(a.report.waves[w].payload_cells == b.report.waves[w].payload_cells);
    }
}

TEST_CASE("tensor dumps are byte identical") {
    const ScoringScheme s;
    const auto seqs = make_sequences({"ACGTACGT", "AGGTCCGT"});
    std::ostringstream seq_dump, par_dump;
    write_tensor_dump(seq_dump, score_sequential<std::int64_t>(seqs, s), s.hash());
    write_tensor_dump(par_dump, run_parallel<std::int64_t>(seqs, s, opts(3, 4)).tensor, s.hash());
    CHECK(seq_dump.str() == par_dump.str());
}

TEST_CASE("report and event log formats") {
    auto o = opts(3, 2);
    o.record_events = true;
    const auto seqs = make_sequences({"ACGTACGT", "ACGAACGT"});
    const auto par = run_parallel<std::int64_t>(seqs, ScoringScheme{}, o);

    std::ostringstream csv;
    write_report_csv(csv, par.report);
    std::istringstream lines(csv.str());
    std::string line;
    std::getline(lines, line);
    CHECK(line == "wave,partitions,messages,payload_cells,elapsed_ns");
    std::size_t rows = 0;
    while (std::getline(lines, line)) ++rows;
    CHECK(rows == 7);
    CHECK(par.report.waves[3].partitions == 4);

    std::ostringstream log;
    write_event_log(log, par.report.events, build_grid(seqs.shape(), 3));
    CHECK(log.str().rfind("0 0 compute_begin (0,0)\n", 0) == 0);
    CHECK(log.str().find(" send - peer=1 phase=2 cells=") != std::string::npos);
    CHECK(log.str().find(" consume (") != std::string::npos);
}

TEST_CASE("capacity cap applies to parallel runs") {
    auto o = opts(3, 2);
    o.max_cells = 10;
    CHECK_THROWS_AS(run_parallel<std::int64_t>(make_sequences({"ACGT", "ACGT"}), ScoringScheme{}, o), CapacityError);
}
