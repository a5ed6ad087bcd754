from langchain.tools import BaseTool

from sphquad_kit.toolkit import SphQuadKit
from sphquad_kit.utils import to_json
from sphquad_kit.utils.recipe import parse_recipe


def _error(e: Exception) -> dict:
    return {
        "status": "error",
        "message": str(e),
        "code": getattr(e, "code", type(e).__name__),
    }


class SphQuadConstructTool(BaseTool):
    name: str = "sphquad_construct"
    description: str = """
    Construct an icosahedrally invariant quadrature rule on the sphere and write it to a file.

    Input: a JSON string with:
    - degree: int, the polynomial degree to integrate exactly, e.g. 17
    - out: string, path of the rule file to write
    - recipe: string, optional, e.g. "vertex,genericx3"; the smallest vertex-pinned recipe if omitted
    """
    sphquad_kit: SphQuadKit

    def _run(self, input: str):
        try:
            data = to_json.to_json(input)
            recipe = parse_recipe(data["recipe"]) if data.get("recipe") else None
            rule, log = self.sphquad_kit.construct(int(data["degree"]), recipe)
            self.sphquad_kit.write_rule(rule, data["out"])
            return {
                "status": "success",
                "nodes": rule.size,
                "iterations": len(log),
                "path": data["out"],
            }
        except Exception as e:
            return _error(e)

    async def _arun(self, input: str):
        return self._run(input)


class SphQuadCheckTool(BaseTool):
    name: str = "sphquad_check"
    description: str = """
    Report the worst spherical-harmonic moment error of a rule file up to a degree.

    Input: a JSON string with:
    - rule: string, path of the rule file
    - degree: int, highest degree to check
    """
    sphquad_kit: SphQuadKit

    def _run(self, input: str):
        try:
            data = to_json.to_json(input)
            rule = self.sphquad_kit.read_rule(data["rule"])
            err = self.sphquad_kit.verify_exactness(rule, int(data["degree"]))
            report = self.sphquad_kit.check_theorem1_conditions(rule)
            return {
                "status": "success",
                "max_residual": err,
                "weight_sum": rule.weight_sum,
                "reflection_conditions": report.passed,
            }
        except Exception as e:
            return _error(e)

    async def _arun(self, input: str):
        return self._run(input)


class SphQuadBenchTool(BaseTool):
    name: str = "sphquad_bench"
    description: str = """
    Integrate a Henyey-Greenstein phase function with several rule files and report the errors.

    Input: a JSON string with:
    - rules: list of rule file paths
    - g: float, optional anisotropy, default 0.5
    - axis: list of 3 floats, optional, default [1/9, 4/9, 8/9]
    """
    sphquad_kit: SphQuadKit

    def _run(self, input: str):
        try:
            data = to_json.to_json(input)
            rules = [self.sphquad_kit.read_rule(p) for p in data["rules"]]
            rows = self.sphquad_kit.error_sweep(rules, data.get("g"), data.get("axis"))
            return {
                "status": "success",
                "rows": [r.model_dump() for r in rows],
            }
        except Exception as e:
            return _error(e)

    async def _arun(self, input: str):
        return self._run(input)


class SphQuadWeightStatsTool(BaseTool):
    name: str = "sphquad_weight_stats"
    description: str = """
    Summarise the weights of a rule file: extrema with multiplicities and the share inside the reference band.

    Input: the path of the rule file.
    """
    sphquad_kit: SphQuadKit

    def _run(self, input: str):
        try:
            stats = self.sphquad_kit.weight_stats(self.sphquad_kit.read_rule(input.strip()))
            return {
                "status": "success",
                "stats": stats.model_dump(),
            }
        except Exception as e:
            return _error(e)

    async def _arun(self, input: str):
        return self._run(input)


def create_sphquad_tools(sphquad_kit: SphQuadKit):
    return [
        SphQuadConstructTool(sphquad_kit=sphquad_kit),
        SphQuadCheckTool(sphquad_kit=sphquad_kit),
        SphQuadBenchTool(sphquad_kit=sphquad_kit),
        SphQuadWeightStatsTool(sphquad_kit=sphquad_kit),
    ]
