#include <gtest/gtest.h>

#include "remedy/capability.hpp"
#include "remedy/error.hpp"
#include "remedy/feedback.hpp"

using namespace remedy;

TEST(Feedback, GoldenTemplates) {
  EXPECT_EQ(RejectionFeedback::missing_capability("restart", "payment").render(),
            "REJECT: missing_capability(\"restart:svc/payment\")");
  EXPECT_EQ(RejectionFeedback::out_of_scope("cart").render(),
            "REJECT: out_of_scope(\"svc/cart\" not in recovery_group)");
  EXPECT_EQ(RejectionFeedback::irreversible_effect("drop_table").render(),
            "REJECT: irreversible_effect(\"drop_table\") requires break_glass");
  EXPECT_EQ(RejectionFeedback::conflict("namespace/prod", "t-7").render(),
            "REJECT: conflict(resource=\"namespace/prod\", txn=\"t-7\")");
  EXPECT_EQ(RejectionFeedback::rate_limited("prod", 10).render(), "REJECT: rate_limited(namespace=\"prod\", limit=10)");
  EXPECT_EQ(RejectionFeedback::precondition_failed("service_exists(prod/cart)").render(),
            "REJECT: precondition_failed(\"service_exists(prod/cart)\")");
  EXPECT_EQ(RejectionFeedback::schema_error("actions: empty").render(), "REJECT: schema_error(\"actions: empty\")");
}

TEST(Feedback, ParseInvertsRender) {
  const std::vector<RejectionFeedback> all{
      RejectionFeedback::missing_capability("scale", "a"), RejectionFeedback::out_of_scope("b"),
      RejectionFeedback::irreversible_effect("drop_table"), RejectionFeedback::conflict("service/prod/x", "t\"1"),
      RejectionFeedback::rate_limited("prod", 3), RejectionFeedback::precondition_failed("traffic_state(p/x, drained)"),
      RejectionFeedback::schema_error("actions[0].kind: unknown action kind \"drop_table\"")};
  for (const auto& f : all) {
    const auto back = RejectionFeedback::parse(f.render());
    ASSERT_TRUE(back) << f.render();
    EXPECT_EQ(*back, f);
  }
  EXPECT_FALSE(RejectionFeedback::parse("ACCEPT"));
  EXPECT_FALSE(RejectionFeedback::parse("REJECT: something_else(\"x\")"));
}

TEST(Capabilities, MostSpecificWins) {
  const ServiceRef pay("prod", "payment"), cart("prod", "cart"), dev("dev", "cart");
  CapabilitySet caps{"restart:prod/*", "!restart:prod/payment", "scale:*"};
  EXPECT_TRUE(caps.permits("restart", cart));
  EXPECT_FALSE(caps.permits("restart", pay));
  EXPECT_FALSE(caps.permits("restart", dev));
  EXPECT_TRUE(caps.permits("scale", dev));
  EXPECT_FALSE(caps.permits("drain", cart));

  CapabilitySet tie{"restart:prod/cart", "!restart:prod/cart"};
  EXPECT_FALSE(tie.permits("restart", cart));
  CapabilitySet narrow_allow{"!restart:*", "restart:prod/cart"};
  EXPECT_TRUE(narrow_allow.permits("restart", cart));
  EXPECT_FALSE(narrow_allow.permits("restart", pay));

  EXPECT_FALSE(CapabilitySet{}.permits("restart", cart));
  EXPECT_TRUE(CapabilitySet::all_builtin().permits("rollback_config", dev));
  EXPECT_FALSE(CapabilitySet::all_builtin().permits("drop_table", dev));
}

TEST(Capabilities, GrantParsing) {
  EXPECT_EQ(Grant::parse("restart:prod/*").str(), "restart:prod/*");
  EXPECT_EQ(Grant::parse("!scale:*").str(), "!scale:*");
  EXPECT_THROW(Grant::parse("restart"), ParseError);
  EXPECT_THROW(Grant::parse(":prod/x"), ParseError);
  EXPECT_THROW(Grant::parse("restart:prod"), ParseError);
}
