#pragma once

#include <stdexcept>
#include <string>

namespace flame {

// Base error for everything raised by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad dataset layout, missing files, malformed inputs.
struct DatasetError : Error {
    using Error::Error;
};

// Invalid run configuration.
struct ConfigError : Error {
    using Error::Error;
};

// Host environment cannot support the request (missing toolchain,
// spawn failure, no coverage instrumentation).
struct EnvironmentError : Error {
    using Error::Error;
};

// Remote or mock backend failure (transport, auth, missing canned response).
struct BackendError : Error {
    using Error::Error;
};

} // namespace flame
