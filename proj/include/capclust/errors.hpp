#pragma once

#include <stdexcept>
#include <string>

namespace capclust {

// Base of all domain errors; `code()` is the stable identifier used in
// CLI messages and tests, `what()` carries details.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& msg)
      : std::runtime_error(code + ": " + msg), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

#define CAPCLUST_DEFINE_ERROR(Name)                        \
  class Name : public Error {                              \
   public:                                                 \
    explicit Name(const std::string& msg = "")             \
        : Error(#Name, msg) {}                             \
  }

CAPCLUST_DEFINE_ERROR(MissingCovariates);
CAPCLUST_DEFINE_ERROR(DuplicateId);
CAPCLUST_DEFINE_ERROR(DimensionMismatch);
CAPCLUST_DEFINE_ERROR(ParseError);
CAPCLUST_DEFINE_ERROR(ZeroVariance);
CAPCLUST_DEFINE_ERROR(RawDataRequired);
CAPCLUST_DEFINE_ERROR(SingularPooled);
CAPCLUST_DEFINE_ERROR(NumericOverflow);
CAPCLUST_DEFINE_ERROR(DegenerateResponsibility);
CAPCLUST_DEFINE_ERROR(GatingDiverged);
CAPCLUST_DEFINE_ERROR(EmptyCluster);
CAPCLUST_DEFINE_ERROR(AllRestartsFailed);
CAPCLUST_DEFINE_ERROR(NoComplementLeft);
CAPCLUST_DEFINE_ERROR(DegenerateProjections);
CAPCLUST_DEFINE_ERROR(DfDSingular);
CAPCLUST_DEFINE_ERROR(BootstrapUnstable);
CAPCLUST_DEFINE_ERROR(PermutationLimit);
CAPCLUST_DEFINE_ERROR(ConfigError);

#undef CAPCLUST_DEFINE_ERROR

}  // namespace capclust
