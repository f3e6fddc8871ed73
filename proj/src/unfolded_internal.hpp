#pragma once

#include "toeplista/unfolded.hpp"

namespace toeplista::detail {

ComplexArray& inhibition_coeffs(Inhibition& inh);
const ComplexArray& inhibition_coeffs(const Inhibition& inh);

ComplexArray apply_filter(Architecture arch, const NetworkDims& dims, const LayerParams& layer,
                          const ComplexArray& y);
ComplexArray apply_inhibition(const NetworkDims& dims, const Inhibition& inh, const ComplexArray& x);

}  // namespace toeplista::detail
