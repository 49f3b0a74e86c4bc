#pragma once

#include <stdexcept>
#include <string>

namespace icdst {

// Base for every exception the library throws. Per-turn failures inside the
// tracking loop never throw; they are recorded in the trace instead.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class FormatError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace icdst
