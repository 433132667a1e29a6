#pragma once

#include <functional>
#include <string_view>

namespace kinex {

using WarningSink = std::function<void(std::string_view)>;

// Default sink writes to stderr only when KINEX_VERBOSE is set.
void set_warning_sink(WarningSink sink);
void warn(std::string_view message);

}  // namespace kinex
