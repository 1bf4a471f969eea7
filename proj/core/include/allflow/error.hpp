#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace allflow {

/// Library component that raised an error. Used to tag CLI diagnostics.
enum class Module { netmodel, steady_poly, homotopy, param_sweep, dynamics, cli };

std::string_view to_string(Module module);

/// Every failure in the library is reported through this exception. `code()`
/// is a stable kebab-case identifier (e.g. "duplicate-slack") that tests and
/// callers match on; `what()` carries the human readable message.
class Error : public std::runtime_error {
public:
    Error(Module module, std::string code, const std::string& message);

    Module module() const noexcept { return module_; }
    const std::string& code() const noexcept { return code_; }

private:
    Module module_;
    std::string code_;
};

}  // namespace allflow
