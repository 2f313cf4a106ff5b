#pragma once

#include <functional>
#include <vector>

namespace sep::quad {

struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Golub-Welsch rules. Laguerre: integral over (0,inf) with weight e^{-x}.
// Hermite: integral over R with weight e^{-x^2}. Legendre: [-1,1], weight 1.
Rule gauss_laguerre(int n);
Rule gauss_hermite(int n);
Rule gauss_legendre(int n);

// Adaptive Simpson on [a,b] to absolute tolerance tol. Robust to kinks and
// jumps in f (the subdivision localizes them); depth-capped.
double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double b, double tol, int max_depth = 40);

}  // namespace sep::quad
