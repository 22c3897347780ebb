#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "hydrodiff/data/date.hpp"

namespace hydrodiff::data {

// Forcing column order, fixed across CSV files and model inputs.
inline constexpr int kNumForcings = 5;     // prcp, tmax, tmin, srad, vp
inline constexpr int kNumStatics = 27;
inline constexpr int kPastDays = 365;      // L_p
inline constexpr int kFutureDays = 7;      // L_ff
inline constexpr int kHorizon = 8;         // L_f = 1 + L_ff (Day-0 .. Day-7)

/// One basin's daily record. Dates are contiguous: day i is start+i.
/// Missing streamflow is stored as NaN.
struct BasinRecord {
    std::string basin_id;
    Date start;
    Eigen::ArrayXXd forcings;   // days x 5
    Eigen::ArrayXd streamflow;  // days (NaN = missing)
    Eigen::ArrayXd statics;     // 27

    Eigen::Index days() const { return forcings.rows(); }
    Date date(Eigen::Index i) const { return start + i; }
    Eigen::Index index_of(Date d) const { return d - start; }
};

/// Conditioning context c plus the aligned training target. target[0] is
/// Day-0 and shares its date with the last row of `past`.
struct ConditioningTuple {
    Eigen::ArrayXXd past;    // 365 x 5
    Eigen::ArrayXXd future;  // 7 x 5
    Eigen::ArrayXd statics;  // 27
    Eigen::ArrayXd target;   // 8 (may hold NaN outside training)
    Date init_date;
    std::string basin_id;
};

/// Per-variable normalization statistics over the training period.
/// Layout: 5 forcings, 27 statics, then streamflow (33 entries).
struct NormStats {
    Eigen::ArrayXd mean;  // 33
    Eigen::ArrayXd stdev; // 33, floored at 1e-8

    static constexpr int kStreamflowIndex = kNumForcings + kNumStatics;
    double q_mean() const { return mean[kStreamflowIndex]; }
    double q_std() const { return stdev[kStreamflowIndex]; }
};

}  // namespace hydrodiff::data
