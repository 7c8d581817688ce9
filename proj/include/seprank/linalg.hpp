#pragma once

#include "seprank/matrix.hpp"

namespace seprank {

// Dense double-precision routines sized for this project's matrices
// (R up to a few hundred).

// Solves A X = B with partial-pivot LU. Throws NumericError when singular.
Mat<double> lu_solve(Mat<double> a, const Mat<double>& b);
Mat<double> inverse(const Mat<double>& a);

struct Svd {
    std::vector<double> sigma;  // descending
    Mat<double> u;              // rows x r
    Mat<double> v;              // cols x r
};

// One-sided Jacobi on the smaller Gram dimension.
Svd jacobi_svd(const Mat<double>& a);

// Moore-Penrose pseudoinverse; singular values below rcond*sigma_max are dropped.
Mat<double> pinv(const Mat<double>& a, double rcond = 1e-13);

double frob_norm(const Mat<double>& a);

}  // namespace seprank
