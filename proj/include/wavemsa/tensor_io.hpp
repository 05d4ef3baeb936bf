#pragma once

#include "wavemsa/dp_core.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace wavemsa {

/// Tensor dump: a short text header terminated by a line "end", then the
/// scores as little-endian int64 or float64 in flatten order.
///
///   wavemsa-tensor 1
///   shape 9,9
///   scheme 84d1c0b6a1f3e2d7
///   type int64
///   end
template <typename Score>
void write_tensor_dump(std::ostream& out, const ScoreTensor<Score>& tensor, std::uint64_t scheme_hash);

struct TensorDump {
    std::vector<std::size_t> shape;
    std::uint64_t scheme_hash = 0;
    std::string type;                // "int64" or "float64"
    std::vector<std::uint8_t> data;  // raw little-endian payload
};

TensorDump read_tensor_dump(std::istream& in);

}  // namespace wavemsa
