#pragma once

#include "brenier/ot.hpp"

namespace brenier {

/// Univariate least-squares isotonic regression by Pool Adjacent Violators.
/// Returns the fitted values in the original index order. Equal z values are
/// pre-averaged into one weighted point and expanded back afterwards.
/// Throws on non-finite input or length mismatch.
Vector pav_fit(const Vector& z, const Vector& y);

}  // namespace brenier
