#include "wavemsa/cost_model.hpp"

#include "wavemsa/dp_core.hpp"
#include "wavemsa/errors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <mutex>
#include <numeric>
#include <thread>

namespace wavemsa {

void CostParams::validate() const {
    if (r < 0 || c < 0) throw ConfigError("r and c must be non-negative");
    if (workers < 1) throw ConfigError("need at least one worker");
    if (allocation.size() != workers) throw ConfigError("allocation must list one count per worker");
    if (std::accumulate(allocation.begin(), allocation.end(), std::size_t{0}) != total_partitions)
        throw ConfigError("allocation does not sum to the partition total");
}

CostParams make_cost_params(const WaveSchedule& sched, double r, double c) {
    CostParams p{r, c, sched.workers(), 0, sched.allocation()};
    p.total_partitions = std::accumulate(p.allocation.begin(), p.allocation.end(), std::size_t{0});
    return p;
}

double computation_term(const CostParams& params) {
    params.validate();
    return params.r * static_cast<double>(*std::max_element(params.allocation.begin(), params.allocation.end()));
}

double communication_term(const CostParams& params, bool corrected) {
    params.validate();
    const double P = static_cast<double>(params.total_partitions);
    double sum_sq = 0;
    for (auto pm : params.allocation) sum_sq += static_cast<double>(pm) * static_cast<double>(pm);
    return corrected ? (params.c / 2) * (P * P - sum_sq) : (params.c / 2) * (P * P * sum_sq);
}

double predict_dt(const CostParams& params, bool corrected) {
    return computation_term(params) + communication_term(params, corrected);
}

GranularityReport granularity(const CostParams& params, const std::vector<std::uint64_t>& cells_sent) {
    params.validate();
    if (cells_sent.size() != params.workers) throw ConfigError("need one sent-cell count per worker");
    GranularityReport rep;
    for (std::size_t m = 0; m < params.workers; ++m) {
        rep.computation.push_back(params.r * static_cast<double>(params.allocation[m]));
        rep.communication.push_back(params.c * static_cast<double>(cells_sent[m]));
    }
    rep.R = *std::max_element(rep.computation.begin(), rep.computation.end());
    rep.C = *std::max_element(rep.communication.begin(), rep.communication.end());
    if (rep.C > 0) rep.ratio = rep.R / rep.C;
    rep.dT = predict_dt(params, true);
    return rep;
}

GranularityReport granularity(const PartitionGrid& grid, const WaveSchedule& sched, double r, double c) {
    return granularity(make_cost_params(sched, r, c), cells_sent_per_worker(grid, sched));
}

double partition_compute_ops(std::size_t partition_size, std::size_t k) {
    return std::pow(static_cast<double>(partition_size), static_cast<double>(k)) *
           (std::ldexp(1.0, static_cast<int>(k)) - 1);
}

double partition_boundary_cells(std::size_t partition_size, std::size_t k) {
    const double s = static_cast<double>(partition_size);
    return std::pow(s, static_cast<double>(k)) - std::pow(s - 1, static_cast<double>(k));
}

std::vector<SweepRow> sweep_partition_sizes(const Shape& shape, std::size_t workers, double r_unit, double c_unit,
                                            SchedulePolicy policy) {
    if (r_unit < 0 || c_unit < 0) throw ConfigError("r_unit and c_unit must be non-negative");
    const auto max_s = *std::min_element(shape.dims().begin(), shape.dims().end());
    if (max_s < 2) throw ConfigError("no candidate partition size");
    std::vector<SweepRow> rows;
    for (std::size_t s = 2; s <= max_s; ++s) {
        PartitionGrid grid(shape, s);
        WaveSchedule sched(grid, workers, policy);
        auto params = make_cost_params(sched, r_unit * partition_compute_ops(s, shape.k()),
                                       c_unit * partition_boundary_cells(s, shape.k()));
        rows.push_back({s, grid.total_partitions(), grid.wave_count(),
                        *std::max_element(params.allocation.begin(), params.allocation.end()),
                        predict_dt(params, true), predict_dt(params, false)});
    }
    return rows;
}

std::size_t recommend_partition_size(const Shape& shape, std::size_t workers, double r_unit, double c_unit,
                                     SchedulePolicy policy) {
    const auto rows = sweep_partition_sizes(shape, workers, r_unit, c_unit, policy);
    if (rows.empty()) throw ConfigError("empty candidate range for the partition size");
    const SweepRow* best = &rows.front();
    for (const auto& row : rows) {
        // Relative slack so ties survive uniform rescaling of the inputs.
        const double slack = 1e-12 * std::max(std::fabs(best->dt_corrected), std::fabs(row.dt_corrected));
        if (row.dt_corrected < best->dt_corrected - slack) best = &row;
    }
    return best->partition_size;
}

Calibration calibrate(std::size_t rounds) {
    using Clock = std::chrono::steady_clock;
    Calibration cal;

    const auto seqs = make_sequences({std::string(60, 'A') + std::string(20, 'C'), std::string(40, 'G') + "ACGT",
                                      std::string(50, 'T') + "CA"});
    const auto t0 = Clock::now();
    const auto tensor = score_sequential<std::int64_t>(seqs, ScoringScheme{});
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    cal.r_unit = secs / (static_cast<double>(tensor.shape().cell_count()) * 7.0);

    // Ping-pong of 64-cell messages between two threads.
    constexpr std::size_t cells_per_message = 64;
    std::mutex mu;
    std::condition_variable cv;
    std::vector<std::uint64_t> slot;
    bool ping = false;
    std::size_t done = 0;
    std::thread partner([&] {
        for (std::size_t i = 0; i < rounds; ++i) {
            std::unique_lock lock(mu);
            cv.wait(lock, [&] { return ping; });
            ping = false;
            ++done;
            cv.notify_all();
        }
    });
    const auto t1 = Clock::now();
    for (std::size_t i = 0; i < rounds; ++i) {
        std::unique_lock lock(mu);
        slot.assign(cells_per_message, i);
        ping = true;
        cv.notify_all();
        cv.wait(lock, [&] { return done == i + 1; });
    }
    const double comm = std::chrono::duration<double>(Clock::now() - t1).count();
    partner.join();
    cal.c_unit = comm / (2.0 * static_cast<double>(rounds) * cells_per_message);
    return cal;
}

}  // namespace wavemsa
