#pragma once

#include <stdexcept>
#include <string>

// The library is built in two precisions from the same sources. The float
// build is the product; the double build only exists so that gradient
// checks can use finite differences without float round-off swamping them.
#ifdef STREAMTF_DOUBLE
#define STREAMTF_NS_BEGIN \
    namespace streamtf {  \
    inline namespace f64 {
#else
#define STREAMTF_NS_BEGIN \
    namespace streamtf {  \
    inline namespace f32 {
#endif
#define STREAMTF_NS_END \
    }                   \
    }

STREAMTF_NS_BEGIN

#ifdef STREAMTF_DOUBLE
using Scalar = double;
#else
using Scalar = float;
#endif

// Shape or size preconditions violated by the caller.
class ShapeError : public std::invalid_argument {
   public:
    using std::invalid_argument::invalid_argument;
};

// Bad configuration values (M < 1, k < 3, probabilities outside range, ...).
class ConfigError : public std::invalid_argument {
   public:
    using std::invalid_argument::invalid_argument;
};

// A forward or backward op produced NaN or Inf.
class NumericError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

// Malformed dataset/checkpoint files.
class FormatError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

STREAMTF_NS_END
