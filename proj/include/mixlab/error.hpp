#pragma once

#include <stdexcept>
#include <string>

namespace mixlab {

// Bad arguments or violated preconditions. The CLI maps these to exit code 2.
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Argument outside the mathematical domain of a closed form.
class DomainError : public InvalidInput {
public:
    using InvalidInput::InvalidInput;
};

// An enumeration would exceed its configured size budget.
class BudgetError : public InvalidInput {
public:
    using InvalidInput::InvalidInput;
};

// Iteration caps, degenerate tuples, failed fits. The CLI maps these to exit code 3.
class NumericDegeneracy : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DegenerateTuple : public NumericDegeneracy {
public:
    using NumericDegeneracy::NumericDegeneracy;
};

class InsufficientData : public NumericDegeneracy {
public:
    using NumericDegeneracy::NumericDegeneracy;
};

class Infeasible : public NumericDegeneracy {
public:
    using NumericDegeneracy::NumericDegeneracy;
};

} // namespace mixlab
