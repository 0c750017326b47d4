#ifndef PNN_SIL_HPP
#define PNN_SIL_HPP

#include <cstdint>
#include <filesystem>
#include <vector>

#include "pnn/matrix.hpp"

namespace pnn {

/// Synthetic intermediate labels: one fixed random target column per class,
/// used as the regression target at a partition boundary. Entries are
/// kappa * U(0,1); kappa 0 gives all-zero targets and is allowed.
struct SilMatrix {
    double kappa = 0.0;
    std::uint64_t seed = 0;
    Matrix values; // boundary_size x num_classes

    std::size_t boundary_size() const { return values.rows(); }
    std::size_t num_classes() const { return values.cols(); }
};

SilMatrix generate_sil(std::size_t boundary_size, std::size_t num_classes,
                       double kappa, std::uint64_t seed);

/// Regression targets for a label batch: row i is the column of values
/// selected by labels[i]. Out-of-range labels throw UsageError.
Matrix sil_targets_for(const SilMatrix& sil, const std::vector<int>& labels);

void save_sil(const std::filesystem::path& path, const SilMatrix& sil);
SilMatrix load_sil(const std::filesystem::path& path);

} // namespace pnn

#endif
