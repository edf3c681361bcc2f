from typing import List


class ColumnHeader:
    """Defines a single column of a case output table"""
    def __init__(self, column_name: str, description: str = '', field_name: str = ''):
        """
        Constructs a single column header

        :param column_name: The CSV name of this column
        :param description: A short human-readable description
        :param field_name: The solution field this column is computed from, if any
        """
        self.name = column_name
        self.description = description
        self.field_name = field_name


class ColumnHeaderArray:
    """Defines a full set of headers for a case output table"""
    def __init__(self, columns: List[ColumnHeader]):
        self.columns = columns

    def __len__(self) -> int:
        return len(self.columns)

    def name_array(self) -> List[str]:
        """Returns the list of column names"""
        return [c.name for c in self.columns]

    def get_descriptive_summary(self) -> str:
        """Returns a descriptive summary of this set of column headers"""
        response = ""
        for c in self.columns:
            response += f"{c.name}: {c.description}\n" if c.description else f"{c.name}\n"
        return response

    def get_descriptive_csv(self) -> str:
        """Returns the CSV header line for these columns"""
        return ','.join(self.name_array())

    def get_field_column(self, field_name: str) -> int:
        """Returns the zero-based index of the first column computed from a field, or -1"""
        for i, c in enumerate(self.columns):
            if c.field_name == field_name:
                return i
        return -1


def convergence_headers(fields: List[str]) -> ColumnHeaderArray:
    """Columns h, e_<field>_L2 for every field, then eoc_<field>_L2 for every field"""
    columns = [ColumnHeader('h', 'maximum triangle diameter')]
    columns.extend(ColumnHeader(f"e_{f}_L2", f"L2 error of {f} against the reference", f) for f in fields)
    columns.extend(ColumnHeader(f"eoc_{f}_L2", f"order of convergence of the {f} error", f) for f in fields)
    return ColumnHeaderArray(columns)
