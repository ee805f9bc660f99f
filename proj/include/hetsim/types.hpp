#pragma once

#include <compare>
#include <stdexcept>
#include <string>
#include <vector>

namespace hetsim {

/// Id of the empty-slot pseudo-job: all-zero features, zero throughput on
/// every accelerator. Pre-registered in every Catalog.
inline constexpr const char* kSentinelJobId = "j0";

/// A machine learning job: the attribute vector (family, batch, replication)
/// plus its SLA fields. Throughput requirements are in normalized units.
struct JobSpec {
    std::string job_id;
    std::string model_family;
    int batch_size = 0;
    int replication = 1;
    double min_throughput = 0.0;  // minimum total throughput the job must get
    int distributability = 1;     // max number of accelerator placements
    bool is_sentinel = false;
};

inline JobSpec sentinel_job() {
    JobSpec j;
    j.job_id = kSentinelJobId;
    j.model_family = "";
    j.batch_size = 0;
    j.replication = 0;
    j.min_throughput = 0.0;
    j.distributability = 0;
    j.is_sentinel = true;
    return j;
}

/// Canonical job id used by the dataset loader and generators: family-batch.
inline std::string default_job_id(const std::string& family, int batch_size) {
    return family + "-" + std::to_string(batch_size);
}

/// One GPU type. Placement decisions are per type per server; power is the
/// affine model idle + per_unit_load * assigned normalized throughput.
struct AcceleratorType {
    std::string acc_id;
    std::string name;
    int capacity = 2;                    // job slots, 1 or 2
    double power_idle = 50.0;            // watts when hosting a combination
    double power_per_unit_load = 150.0;  // watts per normalized throughput unit
};

/// A set of one or two distinct jobs sharing one accelerator. Members are
/// kept sorted so combinations compare and hash consistently.
class Combination {
  public:
    Combination() = default;

    static Combination solo(std::string job_id) {
        Combination c;
        c.members_.push_back(std::move(job_id));
        return c;
    }

    static Combination pair(std::string a, std::string b) {
        if (a == b) throw std::invalid_argument("combination members must be distinct: " + a);
        Combination c;
        if (b < a) std::swap(a, b);
        c.members_.push_back(std::move(a));
        c.members_.push_back(std::move(b));
        return c;
    }

    /// Builds from 1 or 2 ids, deduplicating order.
    static Combination of(const std::vector<std::string>& ids) {
        if (ids.size() == 1) return solo(ids[0]);
        if (ids.size() == 2) return pair(ids[0], ids[1]);
        throw std::invalid_argument("combination must have 1 or 2 members");
    }

    const std::vector<std::string>& members() const { return members_; }
    int size() const { return static_cast<int>(members_.size()); }
    bool is_solo() const { return members_.size() == 1; }

    bool contains(const std::string& job_id) const {
        for (const auto& m : members_)
            if (m == job_id) return true;
        return false;
    }

    /// The co-located partner of `job_id`, or the sentinel id for a solo.
    std::string partner_of(const std::string& job_id) const {
        if (!contains(job_id)) throw std::invalid_argument("job " + job_id + " not in combination");
        if (is_solo()) return kSentinelJobId;
        return members_[0] == job_id ? members_[1] : members_[0];
    }

    std::string str() const {
        std::string s = "{" + members_[0];
        if (members_.size() == 2) s += "," + members_[1];
        return s + "}";
    }

    auto operator<=>(const Combination&) const = default;

  private:
    std::vector<std::string> members_;  // sorted, size 1 or 2
};

}  // namespace hetsim
