#pragma once

#include <stdexcept>
#include <string>

namespace graphsq
{
    /// Invalid parameters or configuration supplied by the caller.
    class ConfigError : public std::invalid_argument
    {
    public:
        explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
    };

    /// Failure detected while running a model: exhausted budgets, broken
    /// numerical invariants, violated dominating bounds.
    class ModelError : public std::runtime_error
    {
    public:
        explicit ModelError(const std::string& what) : std::runtime_error(what) {}
    };
} // namespace graphsq
