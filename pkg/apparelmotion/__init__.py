"""Motion transfer for rigged stylized characters with learned body and apparel deformation."""
