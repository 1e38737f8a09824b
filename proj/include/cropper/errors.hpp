#pragma once

#include <stdexcept>
#include <string>

namespace cropper {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define CROPPER_DEFINE_ERROR(Name)            \
  class Name : public Error {                 \
   public:                                    \
    using Error::Error;                       \
  };

// geometry
CROPPER_DEFINE_ERROR(InvalidBox)
CROPPER_DEFINE_ERROR(SpaceMismatch)
CROPPER_DEFINE_ERROR(MissingDimensions)

// dataset
CROPPER_DEFINE_ERROR(SchemaError)
CROPPER_DEFINE_ERROR(EmptyDataset)
CROPPER_DEFINE_ERROR(DecodeError)

// embedding
CROPPER_DEFINE_ERROR(DimensionMismatch)
CROPPER_DEFINE_ERROR(ProviderUnavailable)

// retrieval
CROPPER_DEFINE_ERROR(InsufficientData)
CROPPER_DEFINE_ERROR(NoMasks)

// prompting
CROPPER_DEFINE_ERROR(EmptyExamples)
CROPPER_DEFINE_ERROR(EmptyCandidates)
CROPPER_DEFINE_ERROR(NoCandidates)
CROPPER_DEFINE_ERROR(TemplateMismatch)

// vlm_client
CROPPER_DEFINE_ERROR(RateLimited)
CROPPER_DEFINE_ERROR(AuthError)
CROPPER_DEFINE_ERROR(ReplayMiss)
CROPPER_DEFINE_ERROR(Timeout)
CROPPER_DEFINE_ERROR(StorageError)

// refinement
CROPPER_DEFINE_ERROR(EmptyPool)

// evaluation
CROPPER_DEFINE_ERROR(EmptyGroundTruth)
CROPPER_DEFINE_ERROR(DegenerateInput)
CROPPER_DEFINE_ERROR(MissingGroundTruth)

#undef CROPPER_DEFINE_ERROR

// Wraps a failure inside the refinement loop; carries the phase name so the
// partial trace can be reported alongside the cause.
class PipelineError : public Error {
 public:
  PipelineError(const std::string& phase, const std::string& what)
      : Error(phase + ": " + what), phase_(phase) {}
  const std::string& phase() const { return phase_; }

 private:
  std::string phase_;
};

}  // namespace cropper
