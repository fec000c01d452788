from .local import (LocalMap, PlanResult, farthest_visible_point,
                    plan_local_path, export_path_overlay)

__all__ = ["LocalMap", "PlanResult", "farthest_visible_point",
           "plan_local_path", "export_path_overlay"]
