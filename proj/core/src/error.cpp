#include "allflow/error.hpp"

namespace allflow {

std::string_view to_string(Module module)
{
    switch (module) {
    case Module::netmodel: return "netmodel";
    case Module::steady_poly: return "steady_poly";
    case Module::homotopy: return "homotopy";
    case Module::param_sweep: return "param_sweep";
    case Module::dynamics: return "dynamics";
    case Module::cli: return "cli";
    }
    return "unknown";
}

Error::Error(Module module, std::string code, const std::string& message)
    : std::runtime_error(std::string(to_string(module)) + ": " + code + ": " + message),
      module_(module),
      code_(std::move(code))
{
}

}  // namespace allflow
