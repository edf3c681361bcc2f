from typing import Type, Union

from r13_mfem.cases.annulus_couette import AnnulusCouette
from r13_mfem.cases.annulus_fourier_mixed import AnnulusFourierMixed
from r13_mfem.cases.base import BaseCase
from r13_mfem.cases.case_types import CaseType
from r13_mfem.cases.cavity_fourier import CavityFourier
from r13_mfem.cases.edge_flow import EdgeFlow
from r13_mfem.cases.element_diagnostics import ElementDiagnostics
from r13_mfem.cases.infsup_study import InfSupStudy


class CaseFactory:
    """Handles construction of cases"""

    @staticmethod
    def class_factory(case_type: CaseType) -> Union[Type[BaseCase], None]:
        """Returns a class Type for the given CaseType enum value, or None if no match"""
        type_map = {
            CaseType.InvalidType: None,
            CaseType.AnnulusCouette: AnnulusCouette,
            CaseType.AnnulusFourierMixed: AnnulusFourierMixed,
            CaseType.CavityFourier: CavityFourier,
            CaseType.EdgeFlow: EdgeFlow,
            CaseType.InfSupStudy: InfSupStudy,
            CaseType.ElementDiagnostics: ElementDiagnostics,
        }
        return type_map.get(case_type, None)

    @staticmethod
    def instance_factory(case_type: CaseType) -> Union[BaseCase, None]:
        """Returns a class instance for the given CaseType enum value, or None if no match"""
        case_class = CaseFactory.class_factory(case_type)
        if case_class is None:
            return None
        return case_class()
