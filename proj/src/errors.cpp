#include "treesmpc/errors.hpp"

namespace treesmpc {

ValidationError::ValidationError(std::vector<std::string> issues)
    : std::runtime_error([&] {
        std::string msg;
        for (const auto& s : issues) {
          if (!msg.empty()) msg += "; ";
          msg += s;
        }
        return msg;
      }()),
      issues_(std::move(issues)) {}

}  // namespace treesmpc
