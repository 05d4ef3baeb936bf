#pragma once

#include "wavemsa/executor.hpp"

#include <string>
#include <vector>

namespace wavemsa {

/// Properties reconstructed from a recorded event log.
struct ProtocolReport {
    /// Per (wave, phase): receivers wait on senders; that graph has no cycle.
    bool wait_for_acyclic = true;
    /// Every OCin read happened in a later wave than the delivery it read.
    bool consumed_after_delivery = true;
    /// Every partition started after all its grid predecessors finished.
    bool wave_safe = true;
    /// Every delivery is preceded by its matching send.
    bool sends_precede_deliveries = true;
    std::size_t messages = 0;
    std::vector<std::string> violations;

    [[nodiscard]] bool ok() const noexcept {
        return wait_for_acyclic && consumed_after_delivery && wave_safe && sends_precede_deliveries;
    }
};

ProtocolReport check_protocol(const std::vector<Event>& events, const PartitionGrid& grid);

}  // namespace wavemsa
