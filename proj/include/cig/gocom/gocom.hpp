#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cig/core/error.hpp"
#include "cig/model/meta.hpp"
#include "cig/platform/data_platform.hpp"

namespace cig::gocom {

enum class Severity { minor, moderate, major };

std::string_view to_string(Severity s);
std::optional<Severity> parse_severity(std::string_view text);

struct InteractionRecord {
    std::string drug_a;
    std::string drug_b;
    Severity severity = Severity::minor;
    std::string description;
};

/// Raised by an interaction source that cannot answer (e.g. a remote
/// service is down). Callers treat the proposal as unverified.
class SourceUnavailable : public Error {
public:
    using Error::Error;
};

/// Extension point for the drug-interaction lookup. The shipped
/// implementation is a local file; a remote client would implement the
/// same interface.
class InteractionSource {
public:
    virtual ~InteractionSource() = default;
    /// Symmetric: lookup(a, b) == lookup(b, a).
    virtual std::optional<InteractionRecord> lookup(const std::string& a, const std::string& b) const = 0;
};

/// Local KB loaded from "drug_a,drug_b,severity,description" lines. Blank
/// lines and lines starting with '#' are skipped.
class InteractionKb : public InteractionSource {
public:
    /// Throws InvalidArgument on a malformed line or a pair listed twice
    /// (in either order). Returns the number of records added.
    std::size_t load(const std::filesystem::path& path);
    std::size_t load_text(const std::string& text, const std::string& origin = "<text>");
    void add(InteractionRecord rec);

    std::optional<InteractionRecord> lookup(const std::string& a, const std::string& b) const override;
    std::size_t size() const { return records_.size(); }

private:
    static std::pair<std::string, std::string> key(const std::string& a, const std::string& b);
    std::map<std::pair<std::string, std::string>, InteractionRecord> records_;
};

inline constexpr std::string_view origin_active = "active-medication";
inline constexpr std::string_view origin_other_guideline = "other-guideline";

struct DrugConflict {
    std::string other;       // the interacting medication
    Severity severity = Severity::minor;
    std::string description;  // from the KB
    std::string origin;       // active-medication | other-guideline
    std::string reference;    // resource id the other medication came from
    std::string explanation;

    bool operator==(const DrugConflict&) const = default;
};

struct ProposalOption {
    std::string medication;
    std::string task;
    std::string evidence;
};

struct MedicationProposal {
    std::string patient_id;
    std::string source_cig;
    std::string decision_task;
    model::Gate gate = model::Gate::all_of;
    std::vector<ProposalOption> options;
};

struct RevisedOption {
    std::string medication;
    std::string task;
    bool safe = true;
    std::vector<DrugConflict> conflicts;
    std::string evidence;
};

struct GateFormat {
    std::string instruction;
    std::size_t required = 0;  // minimum number of options to follow
    std::size_t allowed = 0;   // maximum number of options to follow
    bool escalation = false;
};

struct RevisedRecommendation {
    std::string source_cig;
    std::string decision_task;
    model::Gate gate = model::Gate::all_of;
    std::vector<RevisedOption> options;
    std::string instruction;
    std::size_t required = 0;
    std::size_t allowed = 0;
    bool escalation = false;
    bool verified = true;  // false when the interaction source was unavailable
};

/// AND: follow all n, escalate on any unsafe option. OR: follow at least one
/// safe option. XOR: exactly one. OR and XOR escalate when nothing is safe.
GateFormat format_by_gate(std::size_t safe, std::size_t total, model::Gate gate);

nlohmann::ordered_json to_json(const DrugConflict& c);
nlohmann::ordered_json to_json(const RevisedOption& o);
nlohmann::ordered_json to_json(const RevisedRecommendation& r);
RevisedRecommendation revised_from_json(const nlohmann::json& j);

/// Pending medication proposals are Communications with this code; the
/// options live in the "options" property as a JSON array.
inline constexpr std::string_view proposal_code = "medication-proposal";

/// Medication codes offered by a stored proposal Communication.
std::vector<std::string> proposal_medications(const platform::Resource& comm);

/// GoCom: interaction check, explanation and gate formatting. Reads the
/// platform; never writes to it.
class Gocom {
public:
    Gocom(const platform::DataPlatform& platform, const InteractionSource& source)
        : platform_(platform), source_(source)
    {
    }

    /// Conflicts against the patient's active MedicationStatements and the
    /// pending proposals of guidelines other than `source_cig`.
    std::vector<DrugConflict> check_option(const std::string& patient, const std::string& medication,
                                           const std::string& source_cig = "") const;

    /// Annotates every option; never drops one. Throws SourceUnavailable.
    RevisedRecommendation mitigate(const MedicationProposal& proposal) const;

    /// Fallback when the interaction source is down: options kept as they
    /// are, escalation on, verified off.
    static RevisedRecommendation unverified(const MedicationProposal& proposal);

private:
    const platform::DataPlatform& platform_;
    const InteractionSource& source_;
};

}  // namespace cig::gocom
