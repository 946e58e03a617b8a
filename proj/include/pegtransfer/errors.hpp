#pragma once

#include <stdexcept>
#include <string>

namespace pegtransfer {

/// Invalid configuration; maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Block, peg or arm id outside the valid range.
class UnknownIdError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Operation called on a block in the wrong status (e.g. picking a held block).
class StateError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class RenderError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Calibration lookup outside the recorded grid.
class ExtrapolationError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Open jaw below the peg-top clearance plane outside a grasp or release window;
/// maps to CLI exit code 3.
class SafetyFault : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace pegtransfer
