#pragma once

#include <map>
#include <string>
#include <string_view>

namespace rimr {

// Substitutes `{{name}}` placeholders. Every placeholder must have a value;
// unused values are ignored. Throws Error(kPrecondition) on a missing value.
std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& values);

}  // namespace rimr
