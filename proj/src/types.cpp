#include "har/types.hpp"

namespace har {

Activity activity_from_name(const std::string& name) {
  const auto& names = activity_names();
  for (size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return static_cast<Activity>(i);
  }
  throw InvalidConfig("unknown activity label: '" + name + "'");
}

}  // namespace har
