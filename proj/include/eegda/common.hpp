#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace eegda {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Labels = std::vector<int>;
using Rng = std::mt19937_64;

/// Base error. The subclasses map onto distinct CLI exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

// Warnings go through a replaceable sink so tests can capture them.
using WarningSink = std::function<void(std::string_view)>;
void warn(std::string_view message);
WarningSink set_warning_sink(WarningSink sink);

/// Deterministic child seed for a named stage, derived from a root seed.
std::uint64_t substream_seed(std::uint64_t root, std::string_view name, std::uint64_t index = 0);

inline Rng make_rng(std::uint64_t root, std::string_view name, std::uint64_t index = 0) {
    return Rng(substream_seed(root, name, index));
}

/// Euclidean distance between two vectors of equal size.
template <typename A, typename B>
double distance(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
    return (a - b).norm();
}

/// Row-wise softmax with max subtraction.
template <typename Derived>
Matrix softmax_rows(const Eigen::MatrixBase<Derived>& logits) {
    Matrix out = logits;
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
        const double peak = out.row(i).maxCoeff();
        out.row(i) = (out.row(i).array() - peak).exp();
        out.row(i) /= out.row(i).sum();
    }
    return out;
}

/// Index of the largest entry; ties resolve to the lowest index.
template <typename Derived>
int argmax(const Eigen::MatrixBase<Derived>& row) {
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < row.size(); ++j)
        if (row(j) > row(best)) best = j;
    return static_cast<int>(best);
}

/// Gather rows by index into a new matrix.
Matrix take_rows(const Matrix& m, const std::vector<std::size_t>& rows);

/// Bitwise copy of a double through float32 precision.
inline double to_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

}  // namespace eegda
