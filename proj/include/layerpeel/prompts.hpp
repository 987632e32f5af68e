#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace layerpeel {

enum class TemplateId { GraphConstruct, GraphUpdate, BoxesAndLabels, PanelAnnotation, DirectTopLayer };

std::string_view template_name(TemplateId id);
std::optional<TemplateId> template_from_name(std::string_view name);
const std::vector<TemplateId>& all_templates();

/// Prompt text exactly as shipped in assets/prompts/<name>.txt.
std::string_view prompt_template(TemplateId id);

/// Pinned SHA-256 of each shipped prompt (lowercase hex).
std::string_view prompt_checksum(TemplateId id);

/// Images sent with the template. The panel template takes one composite image.
int template_image_arity(TemplateId id);

/// Replaces every "{key}" with its value. Unknown keys are left as-is.
std::string render_template(TemplateId id, const std::map<std::string, std::string>& substitutions);

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);

} // namespace layerpeel
