#pragma once

#include <stdexcept>
#include <string>

namespace mourre {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

#define MOURRE_ERROR(Name)                                   \
    struct Name : Error {                                    \
        explicit Name(const std::string& what) : Error(#Name ": " + what) {} \
    }

MOURRE_ERROR(NotHermitian);
MOURRE_ERROR(DecompositionFailed);
MOURRE_ERROR(SingularResolvent);
MOURRE_ERROR(DimensionMismatch);
MOURRE_ERROR(UnboundedDerivative);
MOURRE_ERROR(QuadratureDiverged);
MOURRE_ERROR(NoPositivity);
MOURRE_ERROR(ScaleSearchFailed);
MOURRE_ERROR(CertificateInvalid);
MOURRE_ERROR(CertificateMissing);
MOURRE_ERROR(InsufficientCommutatorOrder);
MOURRE_ERROR(NoEigenvalueNear);
MOURRE_ERROR(DimensionOverflow);
MOURRE_ERROR(QuadratureDisagreement);
MOURRE_ERROR(ConfigError);

#undef MOURRE_ERROR

}  // namespace mourre
