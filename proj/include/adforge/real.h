#pragma once

// Scalar type used by every tensor in the library.
//
// The library is built as float32. Defining ADFORGE_REAL_DOUBLE compiles the
// same sources in float64 under a distinct inline namespace, which is what the
// finite-difference gradient checks link against: central differences in
// float32 cannot resolve a 1e-3 relative error on small gradient entries.

#if defined(ADFORGE_REAL_DOUBLE)
#define ADFORGE_PRECISION_NS f64
#else
#define ADFORGE_PRECISION_NS f32
#endif

#define ADFORGE_NAMESPACE_BEGIN \
    namespace adforge {         \
    inline namespace ADFORGE_PRECISION_NS {
#define ADFORGE_NAMESPACE_END \
    }                         \
    }

ADFORGE_NAMESPACE_BEGIN

#if defined(ADFORGE_REAL_DOUBLE)
using Real = double;
#else
using Real = float;
#endif

ADFORGE_NAMESPACE_END
