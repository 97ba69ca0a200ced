#pragma once

#include <Eigen/Core>
#include <vector>

namespace spdelab {

/// E[ prod_r (a_r . xi) ] for iid standard normal xi, by the Wick pairing
/// recursion. Exact for any order; odd products vanish.
double gaussian_product_moment(const std::vector<Eigen::VectorXd>& forms);

}  // namespace spdelab
