#ifndef UVT_QUADRATURE_HPP
#define UVT_QUADRATURE_HPP

#include <vector>

namespace uvt {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Gauss-Legendre rule with n nodes on [a, b]. Nodes are ascending.
QuadratureRule gauss_legendre(int n, double a, double b);

}  // namespace uvt

#endif
