#ifndef COVEX_BUILTIN_RESOURCES_HPP
#define COVEX_BUILTIN_RESOURCES_HPP

#include <string_view>

// Generated at build time from core/data/.
namespace covex::resources {
extern const std::string_view kDecontractions;
extern const std::string_view kWordlist;
}  // namespace covex::resources

#endif  // COVEX_BUILTIN_RESOURCES_HPP
