#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace locmap {

/// Base class of every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Caller supplied a value outside an operation's domain.
class InvalidInput : public Error {
public:
    using Error::Error;
};

/// Two grids that must share a shape do not.
class DimensionError : public Error {
public:
    DimensionError(std::size_t rows_a, std::size_t cols_a, std::size_t rows_b, std::size_t cols_b)
        : Error("dimension mismatch: " + std::to_string(rows_a) + "x" + std::to_string(cols_a) +
                " vs " + std::to_string(rows_b) + "x" + std::to_string(cols_b)) {}
    explicit DimensionError(const std::string& what) : Error(what) {}
};

class InvalidK : public Error {
public:
    InvalidK(std::size_t k, std::size_t max_k)
        : Error("k=" + std::to_string(k) + " outside [1, " + std::to_string(max_k) + "]") {}
};

class EmptyDataset : public Error {
public:
    EmptyDataset() : Error("dataset is empty") {}
};

class MissingPrediction : public Error {
public:
    explicit MissingPrediction(const std::string& id)
        : Error("record '" + id + "' has no pred_label (required for top1 accuracy)") {}
};

class EmptyObject : public Error {
public:
    EmptyObject() : Error("refined object map contains no foreground") {}
};

class DivergenceError : public Error {
public:
    DivergenceError(std::size_t step, double loss, double initial)
        : Error("training diverged at step " + std::to_string(step) + " (loss " + std::to_string(loss) +
                " > 10 x initial " + std::to_string(initial) + ")"),
          step_(step) {}
    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

/// A file could not be opened, read or written.
class IoError : public Error {
public:
    using Error::Error;
};

/// Malformed array container. The kind names the offending header field.
class ParseError : public Error {
public:
    enum class Kind { BadMagic, UnsupportedVersion, BadHeader, UnsupportedDtype, FortranOrder, BadShape, Truncated };

    ParseError(Kind kind, const std::string& detail) : Error(std::string(name(kind)) + ": " + detail), kind_(kind) {}

    Kind kind() const noexcept { return kind_; }

    static const char* name(Kind kind) noexcept {
        switch (kind) {
            case Kind::BadMagic: return "BadMagic";
            case Kind::UnsupportedVersion: return "UnsupportedVersion";
            case Kind::BadHeader: return "BadHeader";
            case Kind::UnsupportedDtype: return "UnsupportedDtype";
            case Kind::FortranOrder: return "FortranOrder";
            case Kind::BadShape: return "BadShape";
            case Kind::Truncated: return "Truncated";
        }
        return "ParseError";
    }

private:
    Kind kind_;
};

/// Mask image containing a value other than 0 or 255.
class InvalidMask : public Error {
public:
    InvalidMask(std::size_t row, std::size_t col, unsigned value)
        : Error("mask pixel (" + std::to_string(row) + ", " + std::to_string(col) + ") has value " +
                std::to_string(value) + ", expected 0 or 255"),
          row_(row), col_(col), value_(value) {}
    std::size_t row() const noexcept { return row_; }
    std::size_t col() const noexcept { return col_; }
    unsigned value() const noexcept { return value_; }

private:
    std::size_t row_, col_;
    unsigned value_;
};

class UnsupportedFormat : public Error {
public:
    using Error::Error;
};

/// Manifest validation failure located by a JSON pointer.
class SchemaError : public Error {
public:
    enum class Kind { MissingField, WrongType, InvalidValue, UnknownVersion, DuplicateId, MissingFile, BadJson };

    SchemaError(Kind kind, std::string pointer, const std::string& detail)
        : Error(std::string(name(kind)) + " at '" + pointer + "': " + detail), kind_(kind),
          pointer_(std::move(pointer)) {}

    Kind kind() const noexcept { return kind_; }
    const std::string& pointer() const noexcept { return pointer_; }

    static const char* name(Kind kind) noexcept {
        switch (kind) {
            case Kind::MissingField: return "MissingField";
            case Kind::WrongType: return "WrongType";
            case Kind::InvalidValue: return "InvalidValue";
            case Kind::UnknownVersion: return "UnknownVersion";
            case Kind::DuplicateId: return "DuplicateId";
            case Kind::MissingFile: return "MissingFile";
            case Kind::BadJson: return "BadJson";
        }
        return "SchemaError";
    }

private:
    Kind kind_;
    std::string pointer_;
};

}  // namespace locmap
