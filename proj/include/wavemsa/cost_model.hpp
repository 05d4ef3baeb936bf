#pragma once

#include "wavemsa/partitioner.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace wavemsa {

/// Inputs of the distributed execution time model. r is the time to score
/// one partition, c the time per unit of cross-worker communication.
struct CostParams {
    double r = 0;
    double c = 0;
    std::size_t workers = 1;
    std::size_t total_partitions = 0;       // P
    std::vector<std::size_t> allocation;  // p_m, sums to P

    /// Throws ConfigError on negative costs or an allocation not summing to P.
    void validate() const;
};

CostParams make_cost_params(const WaveSchedule& sched, double r, double c);

/// dT = r * max(p_m) + (c/2) * (P^2 - sum p_m^2). With corrected = false the
/// communication term takes the product form, (c/2) * (P^2 * sum p_m^2).
double predict_dt(const CostParams& params, bool corrected = true);
double computation_term(const CostParams& params);
double communication_term(const CostParams& params, bool corrected = true);

struct GranularityReport {
    std::vector<double> computation;    // R_m = r * p_m
    std::vector<double> communication;  // C_m = c * cells sent by m
    double R = 0;                       // max over workers
    double C = 0;
    std::optional<double> ratio;  // R / C, absent when C == 0
    double dT = 0;
};

GranularityReport granularity(const CostParams& params, const std::vector<std::uint64_t>& cells_sent);
GranularityReport granularity(const PartitionGrid& grid, const WaveSchedule& sched, double r, double c);

/// Per-partition scale factors: S^k (2^k - 1) neighbour evaluations and
/// S^k - (S-1)^k boundary cells.
double partition_compute_ops(std::size_t partition_size, std::size_t k);
double partition_boundary_cells(std::size_t partition_size, std::size_t k);

struct SweepRow {
    std::size_t partition_size = 0;
    std::size_t partitions = 0;
    std::size_t waves = 0;
    std::size_t max_pm = 0;
    double dt_corrected = 0;
    double dt_printed = 0;
};

/// Every S in [2, min rho_i] with r = r_unit * S^k (2^k - 1) and
/// c = c_unit * (S^k - (S-1)^k).
std::vector<SweepRow> sweep_partition_sizes(const Shape& shape, std::size_t workers, double r_unit, double c_unit,
                                            SchedulePolicy policy = SchedulePolicy::block);

/// Argmin of the corrected dT over the sweep; ties go to the smaller S.
std::size_t recommend_partition_size(const Shape& shape, std::size_t workers, double r_unit, double c_unit,
                                     SchedulePolicy policy = SchedulePolicy::block);

struct Calibration {
    double r_unit = 0;  // seconds per cell-neighbour evaluation
    double c_unit = 0;  // seconds per communicated cell
};

/// Times a small sequential scoring run and a two-thread message ping-pong.
Calibration calibrate(std::size_t rounds = 2000);

}  // namespace wavemsa
