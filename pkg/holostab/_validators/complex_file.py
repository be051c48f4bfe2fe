"""
This file defines the Pydantic model of the complex JSON file.

    {"vertices": [ids], "edges": [[i, j], ...], "triangles": [[i, j, k], ...],
     "edge_weights": [floats aligned with edges], "triangle_weights": [floats]}

``triangles`` may be omitted, in which case every 3-clique becomes a triangle.
Weights are optional; missing edge weights default to one.
"""

from typing import List, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, model_validator

Label = Union[int, str]


class ComplexFile(BaseModel):
    """
    Represents a complex file on disk.

    Args:
        vertices (List[int | str]): Vertex labels.
        edges (List[List[int | str]]): Edges as label pairs.
        triangles (List[List[int | str]], optional): Triangles as label triples.
        edge_weights (List[float], optional): Strictly positive, aligned with ``edges``.
        triangle_weights (List[float], optional): Strictly positive, aligned with ``triangles``.
    """

    model_config = ConfigDict(extra="forbid")

    vertices: List[Label]
    edges: List[List[Label]] = Field(default_factory=list)
    triangles: Optional[List[List[Label]]] = None
    edge_weights: Optional[List[PositiveFloat]] = None
    triangle_weights: Optional[List[PositiveFloat]] = None

    @model_validator(mode="after")
    def _check_shapes(self):
        for edge in self.edges:
            if len(edge) != 2:
                raise ValueError(f"edge {edge} must have two vertices")
        for triangle in self.triangles or []:
            if len(triangle) != 3:
                raise ValueError(f"triangle {triangle} must have three vertices")
        if self.edge_weights is not None and len(self.edge_weights) != len(self.edges):
            raise ValueError("edge_weights must align with edges")
        if self.triangle_weights is not None:
            if self.triangles is None:
                raise ValueError("triangle_weights require an explicit triangle list")
            if len(self.triangle_weights) != len(self.triangles):
                raise ValueError("triangle_weights must align with triangles")
        return self
