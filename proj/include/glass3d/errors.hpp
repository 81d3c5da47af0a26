#pragma once

#include <stdexcept>
#include <string>

namespace glass3d {

/// Base class for every error raised by the toolkit. `kind()` is a stable
/// identifier used in machine-readable diagnostics.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& message)
        : std::runtime_error(message), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define GLASS3D_DEFINE_ERROR(Name)                                            \
    class Name : public Error {                                               \
    public:                                                                   \
        explicit Name(const std::string& message) : Error(#Name, message) {} \
    }

GLASS3D_DEFINE_ERROR(InvalidInput);
GLASS3D_DEFINE_ERROR(InvalidTransform);
GLASS3D_DEFINE_ERROR(InvalidPlane);
GLASS3D_DEFINE_ERROR(InvalidIntrinsics);
GLASS3D_DEFINE_ERROR(DegenerateGeometry);
GLASS3D_DEFINE_ERROR(OutOfRange);
GLASS3D_DEFINE_ERROR(RayParallelToPlane);
GLASS3D_DEFINE_ERROR(PlaneBehindCamera);
GLASS3D_DEFINE_ERROR(RenderError);
GLASS3D_DEFINE_ERROR(InvalidMasks);
GLASS3D_DEFINE_ERROR(EmptyInstance);
GLASS3D_DEFINE_ERROR(ShapeError);
GLASS3D_DEFINE_ERROR(SingularConfiguration);
GLASS3D_DEFINE_ERROR(EmptyEvaluation);
GLASS3D_DEFINE_ERROR(GenerationFailed);
GLASS3D_DEFINE_ERROR(EmptyDataset);
GLASS3D_DEFINE_ERROR(FormatError);
GLASS3D_DEFINE_ERROR(OverlappingMasks);

#undef GLASS3D_DEFINE_ERROR

/// Raised when P*n = -1 has no consistent solution, i.e. the plane passes
/// through (or very near) the camera center.
class NearOriginPlane : public Error {
public:
    NearOriginPlane(const std::string& message, double residual)
        : Error("NearOriginPlane", message), residual_(residual) {}

    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

}  // namespace glass3d
