#include "wavemsa/tensor_io.hpp"

#include <bit>
#include <cstring>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

namespace wavemsa {

template <typename Score>
void write_tensor_dump(std::ostream& out, const ScoreTensor<Score>& tensor, std::uint64_t scheme_hash) {
    static_assert(sizeof(Score) == 8);
    out << "wavemsa-tensor 1\n"
        << "shape " << tensor.shape().to_string() << '\n'
        << "scheme " << std::hex << std::setw(16) << std::setfill('0') << scheme_hash << std::dec << '\n'
        << "type " << ScoreTraits<Score>::name << '\n'
        << "end\n";
    for (Score v : tensor.values()) {
        auto bits = std::bit_cast<std::uint64_t>(v);
        char buf[8];
        for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
        out.write(buf, 8);
    }
}

TensorDump read_tensor_dump(std::istream& in) {
    TensorDump dump;
    std::string line;
    if (!std::getline(in, line) || line != "wavemsa-tensor 1") throw ParseError("not a tensor dump", 1);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line == "end") break;
        std::istringstream fields(line);
        std::string key, value;
        fields >> key >> value;
        if (key == "shape") dump.shape = parse_shape(value).dims();
        else if (key == "scheme") dump.scheme_hash = std::stoull(value, nullptr, 16);
        else if (key == "type") dump.type = value;
        else throw ParseError("unknown header key '" + key + "'", line_no);
    }
    if (dump.shape.empty() || dump.type.empty()) throw ParseError("incomplete tensor dump header", line_no);
    Offset cells = 1;
    for (auto d : dump.shape) cells *= d;
    dump.data.resize(cells * 8);
    in.read(reinterpret_cast<char*>(dump.data.data()), static_cast<std::streamsize>(dump.data.size()));
    if (static_cast<std::size_t>(in.gcount()) != dump.data.size()) throw ParseError("truncated tensor payload", 0);
    return dump;
}

template void write_tensor_dump(std::ostream&, const ScoreTensor<std::int64_t>&, std::uint64_t);
template void write_tensor_dump(std::ostream&, const ScoreTensor<double>&, std::uint64_t);

}  // namespace wavemsa
