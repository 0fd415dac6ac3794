#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace coho_euler {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or non-finite input values, wrong vector lengths.
class InputError : public Error {
public:
    using Error::Error;
};

/// Arrays whose shapes disagree with each other (e.g. structure constants vs Q).
class StructuralError : public Error {
public:
    using Error::Error;
};

/// Input is well-formed but violates a mathematical requirement.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Evaluation outside the orbit-space domain (at or past a singular endpoint).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Configuration the library refuses to guess about.
class UnsupportedError : public Error {
public:
    using Error::Error;
};

/// Time integration failed: CFL violation, non-finite stage, broken watchdog.
class NumericalFailure : public Error {
public:
    NumericalFailure(std::string kind, const std::string& what, double t = 0.0, int stage = -1)
        : Error(what), kind_(std::move(kind)), t_(t), stage_(stage) {}

    const std::string& kind() const noexcept { return kind_; }
    double time() const noexcept { return t_; }
    int stage() const noexcept { return stage_; }

private:
    std::string kind_;
    double t_;
    int stage_;
};

/// One named check with its residual and the threshold it was held to.
struct CheckResult {
    std::string name;
    double residual = 0.0;
    double threshold = 0.0;
    bool passed = true;
    std::string detail;
    // Informational entries are reported but never fail the report.
    bool informational = false;
};

struct ValidationReport {
    std::vector<CheckResult> checks;

    bool passed() const {
        for (const auto& c : checks)
            if (!c.informational && !c.passed) return false;
        return true;
    }

    const CheckResult* find(const std::string& name) const {
        for (const auto& c : checks)
            if (c.name == name) return &c;
        return nullptr;
    }

    void add(std::string name, double residual, double threshold, std::string detail = {}) {
        checks.push_back({std::move(name), residual, threshold, residual < threshold, std::move(detail), false});
    }

    void add_flag(std::string name, bool ok, std::string detail = {}) {
        checks.push_back({std::move(name), ok ? 0.0 : 1.0, 0.5, ok, std::move(detail), false});
    }

    void add_info(std::string name, double value, std::string detail = {}) {
        checks.push_back({std::move(name), value, 0.0, true, std::move(detail), true});
    }

    void merge(const ValidationReport& other, const std::string& prefix = {}) {
        for (auto c : other.checks) {
            if (!prefix.empty()) c.name = prefix + c.name;
            checks.push_back(std::move(c));
        }
    }
};

} // namespace coho_euler
