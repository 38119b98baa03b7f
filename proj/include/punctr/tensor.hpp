#pragma once

#include <Eigen/Dense>

#include "punctr/rng.hpp"

namespace punctr {

// Row-major so a sequence's time steps are contiguous rows.
template <typename T>
using MatX = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
using VecX = Eigen::Matrix<T, Eigen::Dynamic, 1>;

template <typename T>
inline bool all_finite(const MatX<T>& m) {
    return m.allFinite();
}

template <typename T>
inline void fill_uniform(MatX<T>& m, Rng& rng, double bound) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            m(i, j) = static_cast<T>(rng.uniform(-bound, bound));
}

}  // namespace punctr
