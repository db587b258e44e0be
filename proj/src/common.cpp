#include "eegda/common.hpp"

#include <iostream>
#include <utility>

namespace eegda {

namespace {

WarningSink& sink() {
    static WarningSink s = [](std::string_view msg) { std::cerr << "warning: " << msg << '\n'; };
    return s;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

void warn(std::string_view message) {
    if (sink()) sink()(message);
}

WarningSink set_warning_sink(WarningSink s) { return std::exchange(sink(), std::move(s)); }

std::uint64_t substream_seed(std::uint64_t root, std::string_view name, std::uint64_t index) {
    // FNV-1a over the stream name, then mixed with the root seed and index.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : name) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return splitmix64(splitmix64(root ^ h) + index);
}

Matrix take_rows(const Matrix& m, const std::vector<std::size_t>& rows) {
    Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
    for (std::size_t i = 0; i < rows.size(); ++i)
        out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(rows[i]));
    return out;
}

}  // namespace eegda
