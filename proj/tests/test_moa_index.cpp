#include "wavemsa/errors.hpp"
#include "wavemsa/moa_index.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

using namespace wavemsa;

namespace {

std::vector<std::uint32_t> masks(const std::vector<Neighbor>& ns) {
    std::vector<std::uint32_t> out;
    for (const auto& [d, n] : ns) out.push_back(d.mask());
    return out;
}

}  // namespace

TEST_CASE("strides are row-major") {
    CHECK(strides(Shape{9, 9}) == std::vector<Offset>{9, 1});
    CHECK(strides(Shape{9, 9, 9, 9}) == std::vector<Offset>{729, 81, 9, 1});
    CHECK(strides(Shape{2, 3, 4}) == std::vector<Offset>{12, 4, 1});
}

TEST_CASE("flatten and unflatten examples") {
    CHECK(flatten(Shape{9, 9}, MultiIndex{2, 3}) == 21);
    CHECK(flatten(Shape{9, 9, 9, 9}, MultiIndex{0, 0, 0, 0}) == 0);
    CHECK(flatten(Shape{2, 3, 4}, MultiIndex{1, 2, 3}) == 23);
    CHECK(unflatten(Shape{9, 9}, 21) == MultiIndex{2, 3});
    CHECK(unflatten(Shape{9, 9}, 0) == MultiIndex{0, 0});
    CHECK(unflatten(Shape{2, 3, 4}, 23) == MultiIndex{1, 2, 3});
}

TEST_CASE("bounds errors") {
    CHECK_THROWS_AS((void)flatten(Shape{9, 9}, MultiIndex{9, 0}), BoundsError);
    CHECK_THROWS_AS((void)flatten(Shape{9, 9}, MultiIndex{1, 1, 1}), BoundsError);
    CHECK_THROWS_AS((void)unflatten(Shape{2, 3, 4}, 24), BoundsError);
}

TEST_CASE("shape invariants are enforced at construction") {
    CHECK_THROWS_AS(Shape({9}), ConfigError);
    CHECK_THROWS_AS(Shape({9, 1}), ConfigError);
    CHECK_THROWS_AS(Shape({1ULL << 32, 1ULL << 32, 2}), ConfigError);
    CHECK(Shape({1ULL << 31, 1ULL << 31}).cell_count() == (1ULL << 62));
    CHECK(parse_shape("9,9,9,9") == Shape{9, 9, 9, 9});
    CHECK(parse_shape("3x4") == Shape{3, 4});
    CHECK_THROWS_AS(parse_shape("3,,4"), ConfigError);
}

TEST_CASE("flatten/unflatten round trip exhaustively") {
    for (const auto& shape : {Shape{9, 9}, Shape{2, 3, 4}, Shape{5, 4, 3, 2}, Shape{3, 3, 3, 3, 3, 3}, Shape{317, 311}}) {
        REQUIRE(shape.cell_count() <= 100000);
        for (Offset o = 0; o < shape.cell_count(); ++o) {
            const auto idx = unflatten(shape, o);
            REQUIRE(shape.contains(idx));
            REQUIRE(flatten(shape, idx) == o);
        }
        const auto& st = shape.strides();
        CHECK(st.back() == 1);
        CHECK(st[0] * shape[0] == shape.cell_count());
        CHECK(std::is_sorted(st.rbegin(), st.rend()));
        CHECK(std::adjacent_find(st.begin(), st.end()) == st.end());
    }
}

TEST_CASE("offset vectors come in canonical counting order") {
    const auto all = OffsetVector::all(3);
    REQUIRE(all.size() == 7);
    CHECK(all.front().to_string() == "001");
    CHECK(all.back().to_string() == "111");
    CHECK(all[3].to_string() == "100");
    CHECK(all[3][0]);
    CHECK_FALSE(all[3][2]);
    CHECK(OffsetVector::all(5).size() == 31);
    CHECK_THROWS_AS(OffsetVector(0, 3), ContractViolation);
    CHECK_THROWS_AS(OffsetVector(8, 3), ContractViolation);
}

TEST_CASE("lower neighbours") {
    const Shape s{9, 9};
    const auto ns = lower_neighbors(s, MultiIndex{3, 4});
    REQUIRE(ns.size() == 3);
    CHECK(ns[0].first.to_string() == "01");
    CHECK(ns[0].second == MultiIndex{3, 3});
    CHECK(ns[1].first.to_string() == "10");
    CHECK(ns[1].second == MultiIndex{2, 4});
    CHECK(ns[2].first.to_string() == "11");
    CHECK(ns[2].second == MultiIndex{2, 3});

    CHECK(lower_neighbors(Shape{4, 5, 6}, MultiIndex{0, 0, 0}).empty());
    CHECK(lower_neighbors(Shape{9, 9, 9}, MultiIndex{4, 4, 4}).size() == 7);
    CHECK(masks(lower_neighbors(s, MultiIndex{3, 0})) == std::vector<std::uint32_t>{2});
}

TEST_CASE("higher neighbours") {
    CHECK(higher_neighbors(Shape{9, 9}, MultiIndex{8, 8}).empty());
    const auto ns = higher_neighbors(Shape{9, 9}, MultiIndex{0, 0});
    REQUIRE(ns.size() == 3);
    CHECK(ns[0].second == MultiIndex{0, 1});
    CHECK(ns[1].second == MultiIndex{1, 0});
    CHECK(ns[2].second == MultiIndex{1, 1});

    // every d in {0,1}^3 \ {0} from the centre of a 3x3x3 tensor
    const auto centre = higher_neighbors(Shape{3, 3, 3}, MultiIndex{1, 1, 1});
    std::set<MultiIndex> got;
    for (const auto& [d, n] : centre) got.insert(n);
    std::set<MultiIndex> want;
    for (std::size_t a = 1; a <= 2; ++a)
        for (std::size_t b = 1; b <= 2; ++b)
            for (std::size_t c = 1; c <= 2; ++c)
                if (a + b + c > 3) want.insert(MultiIndex{a, b, c});
    CHECK(got == want);
}

TEST_CASE("neighbour count identity and converse property") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t k = std::uniform_int_distribution<std::size_t>(2, 4)(rng);
        std::vector<std::size_t> dims(k);
        for (auto& d : dims) d = std::uniform_int_distribution<std::size_t>(2, 5)(rng);
        const Shape shape(dims);
        const std::size_t full = (std::size_t{1} << k) - 1;
        for (Offset o = 0; o < shape.cell_count(); ++o) {
            const auto x = unflatten(shape, o);
            const auto lower = lower_neighbors(shape, x);
            std::size_t clipped = 0;
            for (const auto& d : OffsetVector::all(k)) {
                bool neg = false;
                for (std::size_t i = 0; i < k; ++i) neg = neg || (d[i] && x[i] == 0);
                clipped += neg;
            }
            REQUIRE(lower.size() + clipped == full);
            for (const auto& [d, n] : lower) {
                const auto up = higher_neighbors(shape, n);
                REQUIRE(std::any_of(up.begin(), up.end(), [&](const Neighbor& h) { return h.first == d && h.second == x; }));
            }
            for (const auto& [d, n] : higher_neighbors(shape, x)) {
                const auto down = lower_neighbors(shape, n);
                REQUIRE(std::any_of(down.begin(), down.end(), [&](const Neighbor& h) { return h.first == d && h.second == x; }));
            }
        }
    }
}
