import unittest
from datetime import timezone

from curloc.utils.helpers import deep_update, get_current_time


class TestHelpers(unittest.TestCase):
    def test_get_current_time(self):
        current_time = get_current_time()
        self.assertEqual(current_time.tzinfo, timezone.utc)
        self.assertEqual(current_time.microsecond, 0)

    def test_deep_update_merges_nested(self):
        base = {"schedule": {"kind": "piecewise", "tau_0": 0.3}, "steps": 10}
        merged = deep_update(base, {"schedule": {"tau_0": 0.2}, "seeds": [1]})
        self.assertEqual(
            merged,
            {
                "schedule": {"kind": "piecewise", "tau_0": 0.2},
                "steps": 10,
                "seeds": [1],
            },
        )

    def test_deep_update_leaves_inputs_alone(self):
        base = {"window": {"size": 30}}
        updates = {"window": {"refresh": "full"}}
        merged = deep_update(base, updates)
        merged["window"]["size"] = 5
        self.assertEqual(base, {"window": {"size": 30}})
        self.assertEqual(updates, {"window": {"refresh": "full"}})

    def test_deep_update_replaces_non_mapping(self):
        merged = deep_update({"seeds": [0, 1, 2]}, {"seeds": [7]})
        self.assertEqual(merged, {"seeds": [7]})
        merged = deep_update({"reward": "binary"}, {"reward": {"a": 1}})
        self.assertEqual(merged, {"reward": {"a": 1}})
