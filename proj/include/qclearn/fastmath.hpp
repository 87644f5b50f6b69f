#pragma once

#include <cstdint>

namespace qclearn {

// exp over an array, 4-wide with FMA when available. Inputs are clamped to
// [-700, 700]; relative error stays within a few ulp of std::exp. Results
// are a pure function of the element value (the remainder runs through the
// same kernel), so chunked callers get identical output for any split.
void vec_exp(const double* in, double* out, std::int64_t n);

}  // namespace qclearn
