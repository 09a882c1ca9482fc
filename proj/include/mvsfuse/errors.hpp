#pragma once

#include <stdexcept>
#include <string>

namespace mvsfuse {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

#define MVSFUSE_DEFINE_ERROR(Name)    \
  struct Name : Error {               \
    using Error::Error;               \
  }

// geometry
MVSFUSE_DEFINE_ERROR(NonPositiveDepth);
MVSFUSE_DEFINE_ERROR(GimbalLock);
MVSFUSE_DEFINE_ERROR(DimensionMismatch);

// scene_synth
MVSFUSE_DEFINE_ERROR(InvalidSceneSpec);
MVSFUSE_DEFINE_ERROR(EmptyScene);

// dataset_io
MVSFUSE_DEFINE_ERROR(IoError);
MVSFUSE_DEFINE_ERROR(MalformedHeader);
MVSFUSE_DEFINE_ERROR(UnsupportedFormat);
MVSFUSE_DEFINE_ERROR(SchemaViolation);

// plane_sweep
MVSFUSE_DEFINE_ERROR(InvalidRange);
MVSFUSE_DEFINE_ERROR(NoSources);
MVSFUSE_DEFINE_ERROR(NonPositiveTemperature);

// mono_prior
MVSFUSE_DEFINE_ERROR(InvalidSpec);
MVSFUSE_DEFINE_ERROR(InsufficientAnchors);

// pose_bench
MVSFUSE_DEFINE_ERROR(InsufficientValidDepth);
MVSFUSE_DEFINE_ERROR(LengthMismatch);

// evalbench
MVSFUSE_DEFINE_ERROR(NoValidPixels);
MVSFUSE_DEFINE_ERROR(EmptyMask);
MVSFUSE_DEFINE_ERROR(EmptyList);

// cli / config
MVSFUSE_DEFINE_ERROR(ConfigError);

#undef MVSFUSE_DEFINE_ERROR

}  // namespace mvsfuse
