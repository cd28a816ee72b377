// experiment_config.hpp - JSON experiment/campaign configuration.
//
// Every key is optional; anything left out takes the built-in default (the
// synthetic face detection and matching service). Schema: docs/config.md.

#ifndef ELASTIC_EXPERIMENT_CONFIG_HPP
#define ELASTIC_EXPERIMENT_CONFIG_HPP

#include "elastic/harness.hpp"

#include <filesystem>
#include <string_view>

namespace elastic {

// Relative paths in the document resolve against base_dir.
CampaignSpec parse_campaign(std::string_view json_text, const std::filesystem::path& base_dir = {});
CampaignSpec load_campaign(const std::filesystem::path& path);

} // namespace elastic

#endif // ELASTIC_EXPERIMENT_CONFIG_HPP
