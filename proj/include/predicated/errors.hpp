#pragma once

#include <cstddef>
#include <set>
#include <stdexcept>
#include <string>

namespace predicated {

// Base of every domain error. kind() is the stable name printed by the CLI.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& message)
        : std::runtime_error(kind + ": " + message), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

class SyntaxError : public Error {
public:
    SyntaxError(std::size_t offset, std::set<std::string> expected, const std::string& found);

    std::size_t offset() const noexcept { return offset_; }
    const std::set<std::string>& expected() const noexcept { return expected_; }

private:
    std::size_t offset_;
    std::set<std::string> expected_;
};

class UnboundVariable : public Error {
public:
    UnboundVariable(std::string variable, std::size_t offset)
        : Error("UnboundVariable",
                "variable '" + variable + "' at byte " + std::to_string(offset) +
                    " is not bound by any quantifier"),
          variable_(std::move(variable)),
          offset_(offset) {}

    const std::string& variable() const noexcept { return variable_; }
    std::size_t offset() const noexcept { return offset_; }

private:
    std::string variable_;
    std::size_t offset_;
};

#define PREDICATED_SIMPLE_ERROR(Name)                                                  \
    class Name : public Error {                                                        \
    public:                                                                            \
        explicit Name(const std::string& message) : Error(#Name, message) {}           \
    }

PREDICATED_SIMPLE_ERROR(PatternMismatch);
PREDICATED_SIMPLE_ERROR(AmbiguousClass);
PREDICATED_SIMPLE_ERROR(UnsupportedForm);
PREDICATED_SIMPLE_ERROR(UnboundPredicate);
PREDICATED_SIMPLE_ERROR(ShapeMismatch);
PREDICATED_SIMPLE_ERROR(NonCrispInput);
PREDICATED_SIMPLE_ERROR(BoundaryInput);
PREDICATED_SIMPLE_ERROR(BadShape);
PREDICATED_SIMPLE_ERROR(InvalidArgument);
PREDICATED_SIMPLE_ERROR(FormatError);

#undef PREDICATED_SIMPLE_ERROR

}  // namespace predicated
