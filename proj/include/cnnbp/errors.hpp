#ifndef CNNBP_ERRORS_HPP
#define CNNBP_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace cnn {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Extents or ranks that do not line up.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Values outside an operation's mathematical domain.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Convolution / pooling geometry that does not tile to integral extents.
class GeometryError : public Error {
public:
    using Error::Error;
};

/// Well-formed request for something this library does not compute.
class UnsupportedError : public Error {
public:
    using Error::Error;
};

/// A file that could not be opened, read, or written.
class IoError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    enum class Kind {
        BadMagic,
        BadVersion,
        Truncated,
        Overflow,
        Inconsistent,
        Format,
    };

    ParseError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

} // namespace cnn

#endif // CNNBP_ERRORS_HPP
