#ifndef GFB_ERROR_HPP
#define GFB_ERROR_HPP

#include <stdexcept>
#include <string>

namespace gfb {

/// Contract violation: bad shapes, out-of-range arguments, missing caches.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data (files, corpora, checkpoints).
class DataError : public Error {
public:
    using Error::Error;
};

} // namespace gfb

#endif // GFB_ERROR_HPP
