#pragma once

#include <stdexcept>
#include <string>

namespace fluxbus {

struct FluxbusError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define FLUXBUS_DEFINE_ERROR(name)                  \
  struct name : FluxbusError {                      \
    explicit name(const std::string& msg)           \
        : FluxbusError(std::string(#name ": ") + msg) {} \
  }

// circuit-model
FLUXBUS_DEFINE_ERROR(RootBracketingFailed);
FLUXBUS_DEFINE_ERROR(MissedMode);
FLUXBUS_DEFINE_ERROR(FitDiverged);

// sideband-theory
FLUXBUS_DEFINE_ERROR(NoResonanceInWindow);
FLUXBUS_DEFINE_ERROR(DegenerateSidebandCollision);
FLUXBUS_DEFINE_ERROR(NullSpaceDegenerate);

// effective-dynamics
FLUXBUS_DEFINE_ERROR(ResonantDenominator);
FLUXBUS_DEFINE_ERROR(SinThetaSingular);

// oracle-dynamics
FLUXBUS_DEFINE_ERROR(StepTooLarge);
FLUXBUS_DEFINE_ERROR(FitPoor);

// tomography
FLUXBUS_DEFINE_ERROR(NonPhysicalProcess);
FLUXBUS_DEFINE_ERROR(CalibrationAmbiguous);
FLUXBUS_DEFINE_ERROR(SingularConfusion);

// allocation
FLUXBUS_DEFINE_ERROR(Infeasible);

// cli
FLUXBUS_DEFINE_ERROR(ConfigError);
FLUXBUS_DEFINE_ERROR(TaskError);

#undef FLUXBUS_DEFINE_ERROR

}  // namespace fluxbus
