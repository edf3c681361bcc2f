from enum import Enum, auto


class CaseType(Enum):
    """Enumeration class of all known experiment drivers"""
    InvalidType = auto()  # used to return an invalid selection wherever needed
    AnnulusCouette = auto()
    AnnulusFourierMixed = auto()
    CavityFourier = auto()
    EdgeFlow = auto()
    InfSupStudy = auto()
    ElementDiagnostics = auto()


class CaseTypeUniqueStrings:
    InvalidType = 'invalid'
    AnnulusCouette = 'annulus_couette'
    AnnulusFourierMixed = 'annulus_fourier_mixed'
    CavityFourier = 'cavity_fourier'
    EdgeFlow = 'edge_flow'
    InfSupStudy = 'infsup_study'
    ElementDiagnostics = 'element_diagnostics'

    @staticmethod
    def get_case_type_from_unique_string(case_type_string) -> CaseType:
        if case_type_string == CaseTypeUniqueStrings.AnnulusCouette:
            return CaseType.AnnulusCouette
        elif case_type_string == CaseTypeUniqueStrings.AnnulusFourierMixed:
            return CaseType.AnnulusFourierMixed
        elif case_type_string == CaseTypeUniqueStrings.CavityFourier:
            return CaseType.CavityFourier
        elif case_type_string == CaseTypeUniqueStrings.EdgeFlow:
            return CaseType.EdgeFlow
        elif case_type_string == CaseTypeUniqueStrings.InfSupStudy:
            return CaseType.InfSupStudy
        elif case_type_string == CaseTypeUniqueStrings.ElementDiagnostics:
            return CaseType.ElementDiagnostics
        return CaseType.InvalidType

    @staticmethod
    def get_unique_string_from_case_type(case_type: CaseType) -> str:
        return getattr(CaseTypeUniqueStrings, case_type.name)
