#include "plumesr/data/split.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "plumesr/error.hpp"
#include "plumesr/random.hpp"

namespace plumesr::data {

std::string to_string(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Val: return "val";
        case Split::Test: return "test";
    }
    return "train";
}

Split split_from_string(const std::string& s) {
    if (s == "train") return Split::Train;
    if (s == "val") return Split::Val;
    if (s == "test") return Split::Test;
    throw InvalidArgument("unknown split '" + s + "'");
}

std::array<std::size_t, 3> split_sizes(std::size_t n) {
    if (n < 3) throw InvalidArgument("need at least 3 runs to form train/val/test, got " + std::to_string(n));
    const auto tenth = [n] { return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(n * 0.1))); };
    const std::size_t val = tenth();
    const std::size_t test = tenth();
    return {n - val - test, val, test};
}

RunSplit split_runs(std::size_t n_runs, std::uint64_t seed) {
    const auto sizes = split_sizes(n_runs);
    std::vector<std::size_t> order(n_runs);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(order);
    RunSplit out;
    out.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(sizes[0]));
    out.val.assign(order.begin() + static_cast<std::ptrdiff_t>(sizes[0]),
                   order.begin() + static_cast<std::ptrdiff_t>(sizes[0] + sizes[1]));
    out.test.assign(order.begin() + static_cast<std::ptrdiff_t>(sizes[0] + sizes[1]), order.end());
    for (auto* part : {&out.train, &out.val, &out.test}) std::sort(part->begin(), part->end());
    return out;
}

}  // namespace plumesr::data
